import ast
from pathlib import Path

import pytest

import disjinv.oracle as oracle
from disjinv.ats import build_ats
from disjinv.canonical import from_program
from disjinv.farkas import solve_all
from disjinv.loop_ir import parse
from disjinv.oracle import (EXIT, HEAD, ExplosionError, auto_box, check_invariant, enumerate_auto,
                            enumerate_reachable, free_vars, initial_states, parse_box)

from helpers import dnf_of, program

XY = ("x", "y")


def fig1_setup():
    p = program("fig1")
    ats = build_ats(from_program(p), p.init)
    return p, ats, solve_all(ats)


def test_running_example_configurations():
    p = program("fig1")
    r = enumerate_reachable(p, step_cap=200)
    heads = {(s["x"], s["y"]) for s in r.states(HEAD)}
    assert heads == {(x, 50) for x in range(50)} | {(x, x) for x in range(50, 100)}
    assert [(s["x"], s["y"]) for s in r.states(EXIT)] == [(100, 100)]
    assert r.runs == {((0, 50), (100, 100))}
    assert r.truncated == 0


def test_loop_never_entered():
    p = parse("vars x;\nwhile (false) { x = x + 1; }\n")
    r = enumerate_reachable(p, {"x": (0, 4)})
    assert r.states(HEAD) == []
    assert {s["x"] for s in r.states(EXIT)} == set(range(5))


def test_three_phase_states_follow_phase_invariants():
    p = parse("vars x, y;\nx = 0; y = 0;\nwhile (x < 30) {\n"
              "  if (x < 10) { x = x + 1; } else { if (x < 20) { x = x + 1; y = y + 1; }"
              " else { x = x + 1; y = y + 2; } }\n}\n")
    heads = enumerate_reachable(p).states(HEAD)
    for s in heads:
        x, y = s["x"], s["y"]
        if x < 10:
            assert y == 0
        elif x < 20:
            assert y == x - 10
        else:
            assert y == 2 * x - 30
    assert len(heads) == 30


def test_solved_map_passes():
    p, ats, aam = fig1_setup()
    v = check_invariant(enumerate_reachable(p), aam, ats)
    assert v and v.checked == 101


def test_tightened_map_fails_at_first_state():
    p, ats, aam = fig1_setup()
    lower = next(l for l in ats.locations if l.id == "l2")
    aam[lower] = dnf_of("x == y", XY)
    v = check_invariant(enumerate_reachable(p), aam, ats)
    assert not v
    assert v.location == "l2" and v.state == {"x": 0, "y": 50}


def test_gopan_map_passes():
    p = program("gopan07")
    ats = build_ats(from_program(p), p.init)
    assert check_invariant(enumerate_reachable(p), solve_all(ats), ats)


def test_nondeterminism_is_explored():
    p = program("halbwachs")
    r = enumerate_reachable(p)
    exits = {(s["x"], s["y"]) for s in r.states(EXIT)}
    assert (101, 101) in exits and (102, 0) in exits


def test_inner_loops_and_breaks():
    p = parse("vars x, y;\nx = 0; y = 0;\nwhile (x < 5) {\n  while (y < x) { y = y + 1; }\n"
              "  if (y == 3) { break; }\n  x = x + 1;\n}\n")
    r = enumerate_reachable(p)
    assert [(s["x"], s["y"]) for s in r.states(EXIT)] == [(3, 3)]


def test_free_variables_and_initial_states():
    p = parse("vars a, b, c;\na = 1; c = b + a;\nassume(b >= 2);\nwhile (false) { }\n")
    assert free_vars(p) == ["b"]
    starts = initial_states(p, {"b": (0, 4)})
    assert sorted(starts) == [(1, 2, 3), (1, 3, 4), (1, 4, 5)]


def test_parse_box():
    assert parse_box("x=0..60, y=-5..5") == {"x": (0, 60), "y": (-5, 5)}
    with pytest.raises(ValueError):
        parse_box("x=0")
    with pytest.raises(ValueError):
        parse_box("x=5..1")


def test_explosion_cap():
    p = program("halbwachs")
    with pytest.raises(ExplosionError):
        enumerate_reachable(p, cap=100)
    with pytest.raises(ValueError):
        enumerate_reachable(p, step_cap=0)


def test_auto_box_stays_under_cap():
    p = program("fig6a")
    box = auto_box(p, cap=20000)
    assert set(box) == set(free_vars(p))
    reach, used = enumerate_auto(p, cap=20000)
    assert reach.work <= 20000 and reach.runs


def test_oracle_has_no_kernel_dependency():
    tree = ast.parse(Path(oracle.__file__).read_text())
    mods = {n.module for n in ast.walk(tree) if isinstance(n, ast.ImportFrom)}
    mods |= {a.name for n in ast.walk(tree) if isinstance(n, ast.Import) for a in n.names}
    assert not any(m and ("polyhedra" in m or "farkas" in m or "ratlin" in m) for m in mods)
