"""Regenerates the taxel golden files from the canonical hand dimensions.

Plain-Python transform chain, independent of the Rust kinematics.
"""
import math

RADIUS, ARC, LENGTH, COLS, ROWS = 0.012, math.radians(120.0), 0.03, 16, 8
CENTER_ALONG, SURFACE_OFFSET, PROXIMAL = 0.025, 0.008, 0.05
PALM_Y, HALF_WIDTH = -0.067, 0.04
FINGERS = [((-HALF_WIDTH, PALM_Y, 0.0), 1.0), ((HALF_WIDTH, PALM_Y, 0.02), -1.0), ((HALF_WIDTH, PALM_Y, -0.02), -1.0)]


def local_sites():
    out = []
    for row in range(ROWS):
        phi = -ARC / 2 + ARC * (row + 0.5) / ROWS
        for col in range(COLS):
            x = -LENGTH / 2 + LENGTH * (col + 0.5) / COLS
            out.append((x, RADIUS * math.sin(phi), RADIUS * (math.cos(phi) - 1.0)))
    return out


def world_site(base, inner_x, p):
    # pad (x, y, z) -> distal link (x, z, -y); link frame origin at the pad center
    lx = PROXIMAL + CENTER_ALONG + p[0]
    ly = SURFACE_OFFSET + p[2]
    lz = -p[1]
    # base axes: x = pointing (0,1,0), y = inner (inner_x,0,0), z = x cross y = (0,0,-inner_x)
    return (base[0] + ly * inner_x, base[1] + lx, base[2] - lz * inner_x)


def main():
    sites = local_sites()
    with open("taxel_layout.csv", "w") as f:
        f.write("taxel_id,finger_id,x,y,z\n")
        for fi in range(3):
            for i, p in enumerate(sites):
                f.write("%d,%d,%r,%r,%r\n" % (fi * 128 + i, fi, p[0], p[1], p[2]))
    with open("taxel_world_zero.csv", "w") as f:
        f.write("taxel_id,finger_id,x,y,z\n")
        for fi, (base, inner_x) in enumerate(FINGERS):
            for i, p in enumerate(sites):
                w = world_site(base, inner_x, p)
                f.write("%d,%d,%r,%r,%r\n" % (fi * 128 + i, fi, w[0], w[1], w[2]))


if __name__ == "__main__":
    main()
