# Driving experiments through the `pendular` command.
#
# Every run is described by an INI config (a bundled preset or a file);
# flags override single fields, and the output directory gets CSV series
# plus a manifest with hashes, seeds and the echoed config.

import json
import tempfile
from pathlib import Path

from pendular.cli import main

main(["presets", "list"])

# %% A preset prints as a config file that can be edited and fed back in.
main(["presets", "show", "bistability"])

# %% Invalid settings are reported together before anything runs (exit 2).
code = main(["validate", "schiller_4k_5mw", "--dt-s", "1e-6"])
print("exit code", code)

# %% A shortened inference run.
out = Path(tempfile.mkdtemp()) / "inference"
main(["run", "schiller_4k_inference", "--trajectories", "200", "--t-end-s", "2e-5",
      "--seed", "11", "--out-dir", str(out), "--quiet"])
manifest = json.loads((out / "manifest.json").read_text())
print(sorted(manifest["files"]), manifest["status"])
print((out / "series.csv").read_text().splitlines()[1][:120], "...")
