#!/usr/bin/env python3
"""Writes the three bundled 640x480 maze grids (binary PGM, white = free).

Each level is a row of vertical walls with one gap per wall, gaps alternating
top / bottom so the path snakes. More walls and narrower gaps make the later
levels harder. Output is deterministic.
"""
import sys
from pathlib import Path

W, H = 640, 480
WALL = 10  # wall thickness, px

LEVELS = {
    # name: (wall count, gap height px)
    "maze1": (1, 80),
    "maze2": (3, 48),
    "maze3": (5, 30),
}


def render(walls, gap):
    img = [[255] * W for _ in range(H)]
    spacing = W / (walls + 1)
    for w in range(walls):
        x0 = int(round(spacing * (w + 1) - WALL / 2))
        top = w % 2 == 0
        # gap sits 20 px from the top or bottom border
        g0 = 20 if top else H - 20 - gap
        for y in range(H):
            if g0 <= y < g0 + gap:
                continue
            for x in range(x0, x0 + WALL):
                img[y][x] = 0
    return img


def write_pgm(path, img):
    with open(path, "wb") as f:
        f.write(b"P5\n# ldsplan bundled maze\n%d %d\n255\n" % (W, H))
        f.write(bytes(v for row in img for v in row))


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "envs"
    out.mkdir(parents=True, exist_ok=True)
    for name, (walls, gap) in LEVELS.items():
        write_pgm(out / f"{name}.pgm", render(walls, gap))


if __name__ == "__main__":
    main()
