"""Bundled benchmark programs."""

from __future__ import annotations

from importlib import resources
from typing import List

PHASE_WIDTH = 50


def rphase_source(r: int, width: int = PHASE_WIDTH) -> str:
    """A counter loop with ``r`` consecutive phases; phase k > 1 also bumps its own counter."""
    if r < 2:
        raise ValueError("need at least two phases")
    counters = [f"y{k}" for k in range(1, r)]
    lines = [f"// {r} phases of {width} iterations each",
             f"vars x, {', '.join(counters)};",
             "x = 0;"]
    lines += [f"{c} = 0;" for c in counters]
    lines.append(f"while (x < {width * r}) {{")
    for k in range(1, r + 1):
        body = "x = x + 1;" + ("" if k == 1 else f" y{k - 1} = y{k - 1} + 1;")
        if k == 1:
            lines.append(f"  if (x < {width}) {{ {body} }}")
        elif k < r:
            lines.append(f"  else if (x < {width * k}) {{ {body} }}")
        else:
            lines.append(f"  else {{ {body} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def names() -> List[str]:
    files = resources.files("disjinv").joinpath("bench")
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".afl"))


def source(name: str) -> str:
    return resources.files("disjinv").joinpath("bench").joinpath(name + ".afl").read_text()
