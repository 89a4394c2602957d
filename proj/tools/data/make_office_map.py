"""Writes data/maps/office.json: a 16 x 10 m office at 0.1 m resolution.

Open hall on the left (x 0-10), a wall at x = 10 with two doorways, and two
rooms on the right split by a wall at y = 5 (kitchen above, office below).
"""
import json
import os

RES = 0.1
W, H = 160, 100


def cell_center(i):
    return (i + 0.5) * RES


occ = [[False] * W for _ in range(H)]  # occ[y][x], y = 0 at the bottom


def wall_box(x0, y0, x1, y1):
    for y in range(H):
        for x in range(W):
            cx, cy = cell_center(x), cell_center(y)
            if x0 <= cx <= x1 and y0 <= cy <= y1:
                occ[y][x] = True


# outer walls
wall_box(0.0, 0.0, 16.0, 0.2)
wall_box(0.0, 9.8, 16.0, 10.0)
wall_box(0.0, 0.0, 0.2, 10.0)
wall_box(15.8, 0.0, 16.0, 10.0)
# partition at x = 10 with doorways at y 1.3-2.7 and 7.3-8.7
wall_box(9.9, 0.0, 10.1, 1.3)
wall_box(9.9, 2.7, 10.1, 7.3)
wall_box(9.9, 8.7, 10.1, 10.0)
# kitchen / office split
wall_box(10.0, 4.9, 16.0, 5.1)
# a pillar in the hall
wall_box(5.0, 2.0, 5.6, 2.6)

rows = ["".join("#" if occ[y][x] else "." for x in range(W)) for y in reversed(range(H))]

office = {
    "resolution": RES,
    "origin": [0.0, 0.0],
    "rows": rows,
    "destinations": {
        "kitchen": [13.0, 8.0, 0.0],
        "secretary's office": [13.0, 2.0, 0.0],
        "charging station": [1.5, 1.5, 0.0],
        "lobby": [1.5, 8.5, 0.0],
        "home": [3.0, 6.0, 0.0],
    },
    "destination_yaw_deg": {"home": 0.0},
    "objects": [
        {"label": "chair", "x": 7.0, "y": 8.0, "z": 0.45, "radius": 0.3, "illumination": 0.9, "occluded_fraction": 0.0},
        {"label": "person", "x": 7.5, "y": 4.0, "z": 0.9, "radius": 0.3, "illumination": 1.0, "occluded_fraction": 0.0},
        {"label": "table", "x": 14.0, "y": 9.0, "z": 0.4, "radius": 0.5, "illumination": 0.8, "occluded_fraction": 0.1},
        {"label": "plant", "x": 0.8, "y": 9.2, "z": 0.5, "radius": 0.25, "illumination": 0.6, "occluded_fraction": 0.2},
        {"label": "sofa", "x": 13.5, "y": 1.0, "z": 0.4, "radius": 0.45, "illumination": 0.7, "occluded_fraction": 0.0},
    ],
    "intrinsics": {"fx": 500.0, "fy": 500.0, "cx": 320.0, "cy": 240.0, "width": 640, "height": 480},
}

out = os.path.join(os.path.dirname(__file__), "..", "..", "data", "maps", "office.json")
with open(out, "w") as f:
    json.dump(office, f, indent=1)
