"""Segment sums and end poses for compiled patterns, from plain kinematics."""
import math

def integrate(pose, segs):
    x, y, th = pose
    for v, w, d in segs:
        if abs(w) < 1e-12:
            x += v * d * math.cos(th)
            y += v * d * math.sin(th)
        else:
            r = v / w
            x += r * (math.sin(th + w * d) - math.sin(th))
            y -= r * (math.cos(th + w * d) - math.cos(th))
            th += w * d
    return x, y, math.atan2(math.sin(th), math.cos(th))

turn = math.radians(30)
rect = []
for _ in range(2):
    rect += [(0.5, 0, 3 / 0.5), (0, turn, (math.pi / 2) / turn), (0.5, 0, 2 / 0.5), (0, turn, (math.pi / 2) / turn)]
print("rectangle segments", len(rect))
print("rectangle drive time", sum(d for v, w, d in rect if v != 0))
print("rectangle total time", sum(d for v, w, d in rect))
print("rectangle end", integrate((0, 0, 0), rect))
lshape = [(0.5, 0, 2 / 0.5), (0, -turn, (math.pi / 2) / turn), (0.5, 0, 1 / 0.5)]
print("L clockwise end", integrate((0, 0, 0), lshape))
arc = [(0.5, 0.5 / 2.0, math.pi / 2 * 2.0 / 0.5)]
print("quarter arc r=2 end", integrate((0, 0, 0), arc))
