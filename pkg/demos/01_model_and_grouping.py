#!/usr/bin/env python3
"""Detection traces, grouped representation, and consecutive compression."""

from vaquery import (BoundingBox, CctOption, FeatureVector, Relation, VTuple,
                     cct, group_count, r2a)

# A trace holds one row per detected object per frame. Object 1 is visible
# in frames 1..11; object 2 shows up in frame 2, disappears, and returns in
# frame 13 (two disjoint appearances).
tuples = []
for fid in range(1, 12):
    tuples.append(VTuple(fid=fid, oid=1, label="person",
                         bb=BoundingBox(10 + fid, 20, 30, 20),
                         fv=FeatureVector([1.0, 0.0]), ts=fid / 30))
for fid in (2, 13):
    tuples.append(VTuple(fid=fid, oid=2, label="person",
                         bb=BoundingBox(30, 50, 8, 4),
                         fv=FeatureVector([0.0, 1.0]), ts=fid / 30))
tuples.sort(key=lambda t: (t.ts, t.fid, t.oid))
rel = Relation.from_tuples(tuples)
print(f"trace: {len(rel.rows)} rows")

# Group on object id, order by frame id: one row per object, with the frame
# ids (and every other column) as parallel ordered vectors.
ar = r2a(rel, gba="oid", aoa="fid")
print(f"grouped: {group_count(ar)} objects")
for row in ar.rows:
    print(f"  oid={row.key}: fids={list(row.column('fid'))}")

# Compressing consecutive appearances keeps one or two frames per visit.
for option in (CctOption.FIRST, CctOption.LAST, CctOption.BOTH):
    compressed = cct(ar, option)
    kept = {row.key: list(row.column("fid")) for row in compressed.rows}
    print(f"cct {option.value:>5}: {kept}")

# Note oid=2 keeps both of its frames under FIRST: its appearances are
# disjoint visits and each visit is counted separately.
