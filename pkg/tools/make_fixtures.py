"""Rebuild the hand-authored scene fixtures shipped in src/objnav/data."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from objnav.gridworld import ObjectInstance, ReflectiveSurface, Room, Scene, save_scene

DATA = Path(__file__).resolve().parents[1] / "src" / "objnav" / "data"


def _rect(r0, c0, r1, c1):
    return frozenset((r, c) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1))


def home1() -> Scene:
    """12 m x 9 m apartment: four rooms on top, four below, 1-cell walls."""
    H, W = 180, 240
    trav = np.zeros((H, W), bool)
    trav[1:-1, 1:-1] = True
    trav[90, :] = False
    for c in (60, 120, 180):
        trav[1:90, c] = False
    for c in (80, 160):
        trav[91:-1, c] = False
    trav[135, 161:-1] = False
    # doorways, 16 cells (0.8 m)
    for c in (60, 120, 180):
        trav[40:56, c] = True
    for c0 in (30, 130, 200):
        trav[90, c0:c0 + 16] = True
    for c in (80, 160):
        trav[110:126, c] = True
    trav[135, 190:206] = True
    rooms = (
        Room("bedroom", (1, 1, 89, 59)),
        Room("bathroom", (1, 61, 89, 119)),
        Room("kitchen", (1, 121, 89, 179)),
        Room("bedroom", (1, 181, 89, 238)),
        Room("living_room", (91, 1, 178, 79)),
        Room("dining_room", (91, 81, 178, 159)),
        Room("bathroom", (91, 161, 134, 238)),
        Room("bedroom", (136, 161, 178, 238)),
    )
    objs = [
        ("bed", _rect(1, 1, 40, 30)),
        ("tv", _rect(86, 20, 89, 39)),
        ("toilet", _rect(1, 100, 14, 108)),
        ("potted plant", _rect(70, 165, 77, 172)),
        ("bed", _rect(50, 209, 89, 238)),
        ("couch", _rect(162, 10, 178, 45)),
        ("tv", _rect(95, 1, 114, 3)),
        ("chair", _rect(130, 100, 139, 109)),
        ("chair", _rect(130, 125, 139, 134)),
        ("toilet", _rect(91, 225, 99, 238)),
    ]
    objects = []
    for k, (cat, cells) in enumerate(objs):
        for cell in cells:
            trav[cell] = False
        objects.append(ObjectInstance(k, cat, cells))
    reflective = (
        ReflectiveSurface(_rect(95, 1, 114, 3), "beyond-range"),
        ReflectiveSurface(_rect(0, 70, 0, 85), "mirror", ((0, 70), (0, 85))),
    )
    return Scene("home1", W, H, 0.05, trav, tuple(objects), reflective, rooms)


def corridor() -> Scene:
    """A 1 m wide, 8 m long corridor with a bedroom at the far end."""
    H, W = 60, 200
    trav = np.zeros((H, W), bool)
    trav[20:40, 1:150] = True
    trav[1:-1, 150:-1] = True
    trav[20:40, 150] = True
    bed = _rect(10, 170, 49, 198)
    for cell in bed:
        trav[cell] = False
    rooms = (Room("living_room", (20, 1, 39, 149)),
             Room("bedroom", (1, 150, 58, 198)))
    return Scene("corridor", W, H, 0.05, trav, (ObjectInstance(0, "bed", bed),), (), rooms)


def doorblock() -> Scene:
    """Two rooms joined by a 0.4 m door that opens onto a wall 0.3 m behind it.

    Seen head-on from the living room, depth speckle on that back wall lands
    in the passage behind the door; without denoising it narrows the
    passage until the planner cannot get through.
    """
    H, W = 90, 150
    trav = np.zeros((H, W), bool)
    trav[2:H - 2, 2:W - 2] = True
    trav[:, 73:77] = False
    trav[41:49, 73:77] = True
    trav[31:59, 83:85] = False
    bed = _rect(8, 95, 23, 119)
    for cell in bed:
        trav[cell] = False
    rooms = (Room("living_room", (2, 2, 87, 72)),
             Room("bedroom", (2, 77, 87, 147)))
    return Scene("doorblock", W, H, 0.05, trav, (ObjectInstance(0, "bed", bed),), (), rooms)


FIXTURES = {"home1": home1, "corridor": corridor, "doorblock": doorblock}


def main(names):
    for name in names or FIXTURES:
        save_scene(FIXTURES[name](), DATA / f"{name}.scene")
        print(f"wrote {DATA / (name + '.scene')}")


if __name__ == "__main__":
    main(sys.argv[1:])
