import math

import numpy as np
import pytest

from mpalloc.oracle import (
    SearchTooLarge,
    brute_force_c_message,
    brute_force_global,
    brute_force_single_user,
    brute_force_w_message,
    exhaustive_balanced_assignment,
)

from conftest import make_instance


def test_global_hand_example():
    # user 0 needs one unit, user 1 two units; two subchannels, gains chosen by hand
    inst = make_instance([[1.0, 0.5], [0.25, 1.0]], demands_units=[1, 2], Q=2)
    value, x = brute_force_global(inst, [[0, 1], [0, 1]])
    # user 0 on f0 at q=1 (power 1), user 1 on f1 at q=2 (power 3)
    assert value == pytest.approx(4.0)
    assert x.tolist() == [[1, 0], [0, 2]]


def test_global_infeasible():
    inst = make_instance([[1.0], [1.0]], demands_units=[1, 1], Q=2)
    value, x = brute_force_global(inst, [[0], [0]])
    assert value == math.inf and x is None


def test_global_guard():
    inst = make_instance(np.ones((2, 8)), demands_units=[1, 1], Q=4)
    with pytest.raises(SearchTooLarge):
        brute_force_global(inst, [list(range(8))] * 2)


def test_single_user_examples():
    costs = [[0, 1, 3], [0, 2, 5]]
    assert brute_force_single_user(costs, 3)[0] == 5.0
    assert brute_force_single_user(costs, 2, [[0, 2, 1], [0, 3, 3]], 4)[0] == 3.0


def test_c_message_hand():
    incoming = [[0.0, 5.0], [1.0, -2.0], [0.5, 4.0]]
    # target 0: silent -> min(1+0.5, -2+0.5, 1+4) = -1.5 ; transmit -> 1.5
    assert list(brute_force_c_message(incoming, 0)) == [-1.5, 1.5]


def test_w_message_hand():
    powers = [[0.0, 1.0, 3.0], [0.0, 2.0, 6.0]]
    incoming = [[100.0, 100.0, 100.0], [0.0, 0.0, 0.0]]
    out = brute_force_w_message(powers, incoming, 0, demand_units=2)
    # q=0 -> other edge at 2: 6 ; q=1 -> 1 + 2 ; q=2 -> 3 + 0
    assert list(out) == [6.0, 3.0, 3.0]
    capped = brute_force_w_message(powers, incoming, 0, demand_units=2, power_cap=3.5)
    assert list(capped) == [math.inf, 3.0, 3.0]


def test_balanced_assignment_hand():
    cost = np.array([[1.0, 2.0, 9.0, 9.0], [9.0, 9.0, 1.0, 1.0]])
    value, owner = exhaustive_balanced_assignment(cost, 2)
    assert value == 5.0 and list(owner) == [0, 0, 1, 1]
