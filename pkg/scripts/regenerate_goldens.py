#!/usr/bin/env python3
"""Regenerate queries/golden/*.csv from the seeded demo dataset.

Run after any deliberate change to the generator or query semantics, then
review the diff: the acceptance suite compares against these bytes exactly.
"""

import pathlib
import sys
import tempfile

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from polygate.datagen import GenSpec, load_dataset, parse_query_file
from polygate.gateway import GatewayService, parse_config
from polygate.model import render_csv

ROOT = pathlib.Path(__file__).resolve().parents[1]

CONFIG = """
listen = 127.0.0.1:0
catalog_engine = rel1
log_level = warning

[engine:rel1]
kind = relational
address = rel1.local:5401
data_dir = {base}/rel1

[engine:arr1]
kind = array
address = arr1.local:5402
data_dir = {base}/arr1

[engine:kv1]
kind = text
address = kv1.local:5403
data_dir = {base}/kv1
"""


def main():
    queries = parse_query_file((ROOT / "queries" / "examples.bdq").read_text())
    golden_dir = ROOT / "queries" / "golden"
    golden_dir.mkdir(exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        svc = GatewayService(parse_config(CONFIG.format(base=tmp), tmp))
        load_dataset(
            svc.registry,
            svc.catalog,
            GenSpec(seed=42, n_patients=100, waveform_len=1000, n_notes=300),
        )
        for name, text in queries:
            rs, _ = svc.query(text)
            out = golden_dir / f"{name}.csv"
            out.write_text(render_csv(rs), newline="")
            print(f"{name}: {len(rs.rows)} rows -> {out.relative_to(ROOT)}")
        svc.shutdown()


if __name__ == "__main__":
    main()
