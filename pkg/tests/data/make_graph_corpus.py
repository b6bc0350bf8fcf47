"""Regenerate graphs500.json: 500 connected simple graphs on 1..8 vertices."""
import json
import random
from pathlib import Path

rng = random.Random(20240917)
out = []
while len(out) < 500:
    n = rng.randint(1, 8)
    # random spanning tree, then extra edges; a mix of cactus-like and dense graphs
    edges = {tuple(sorted((v, rng.randrange(v)))) for v in range(1, n)}
    p = rng.choice([0.0, 0.1, 0.25, 0.5, 0.8])
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.add((u, v))
    if n == 1:
        continue
    out.append({"n": n, "edges": sorted(edges)})
Path(__file__).with_name("graphs500.json").write_text(json.dumps(out, separators=(",", ":")) + "\n")
