# Copyright 2026 The ladc Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Runs the CLI end to end and validates concepts.json against the published schema."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main() -> int:
    cli, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(Path(schema_path).read_text())
    with tempfile.TemporaryDirectory() as tmp:
        data, out = Path(tmp) / "data", Path(tmp) / "out"
        for args in (
            ["synth", "--classes", "3", "--count", "4", "--size", "32", "--seed", "4", "--out", str(data)],
            ["extract", "--data", str(data / "images"), "--out", str(out), "--n-concepts", "5",
             "--epochs", "2", "--toy-model"],
            ["score", "--out", str(out)],
            ["report", "--out", str(out), "--max-examples", "3"],
        ):
            subprocess.run([cli, *args], check=True, stdout=subprocess.DEVNULL)
        doc = json.loads((out / "concepts.json").read_text())
        jsonschema.validate(doc, schema)
        importances = [c["importance"] for c in doc["concepts"]]
        assert importances == sorted(importances, reverse=True), importances
        assert len(doc["concepts"]) == doc["config"]["n_concepts"]
        for c in doc["concepts"]:
            for rel in c["examples"]:
                assert (out / rel).is_file(), rel
        broken = dict(doc)
        del broken["eval_counts"]
        try:
            jsonschema.validate(broken, schema)
        except jsonschema.ValidationError:
            pass
        else:
            raise AssertionError("schema accepted a report without eval_counts")
    print("concepts.json validates")
    return 0


if __name__ == "__main__":
    sys.exit(main())
