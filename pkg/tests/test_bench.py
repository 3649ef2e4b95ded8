import json

import numpy as np

from opscan import bench
from opscan.model.params import ModelDims, init_params


def tiny_params():
    return init_params(ModelDims(152, 8, 8, 4, 64), seed=0)


def test_bench_report_structure(tmp_path):
    params = tiny_params()
    report = bench.run_bench(params, buckets=(50, 200), seed=1)
    assert [b.length for b in report.buckets] == [50, 200]
    for b in report.buckets:
        assert b.n == 5
        assert b.mean_seconds > 0
        assert b.std_seconds >= 0
        assert b.forward_mean_seconds > 0
    assert report.backend in ("pure", "compiled")

    json_path = tmp_path / "bench.json"
    csv_path = tmp_path / "bench.csv"
    report.write_json(json_path)
    report.write_csv(csv_path)
    data = json.loads(json_path.read_text())
    assert len(data["buckets"]) == 2
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "length,mean_s,std_s"
    assert len(lines) == 3


def test_scan_once_probability_in_range():
    from opscan.evm import default_table

    params = tiny_params()
    rng = np.random.default_rng(3)
    table = default_table()
    code = bench._synthesize_bytecode(120, rng, table)
    prob, total_s, fwd_s = bench.scan_once(params, code, table)
    assert 0.0 < prob < 1.0
    assert total_s >= fwd_s > 0


def test_default_buckets_match_published_lengths():
    assert bench.DEFAULT_BUCKETS == (500, 1000, 1500, 2000, 4000, 8000,
                                     12000, 20000, 25000)
