"""Print the manifest of the full 100,000 x 500 corpus without simulating it."""
import json

from vibro.synth import DatasetConfig, build_manifest

if __name__ == "__main__":
    manifest = build_manifest(DatasetConfig(record_count=100_000, series_length=500))
    print(json.dumps({"shape": list(manifest.shape), "channels": manifest.channel_count,
                      "sample_rate_hz": manifest.config["sample_rate"]}, indent=2))
