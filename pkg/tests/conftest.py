import os

import pytest

from logo_te.cli import main

SMALL_INI = """\
[run]
seed = {seed}
[cluster]
min_cluster_size = 5
[split]
h_a = 40
h_t = 10
val_years = 0.15
test_years = 0.15
[model]
d = 16
L_local = 1
L_global = 1
T_local = 3
T_global = 3
channels = 8
[train]
lr = 0.01
weight_decay = 0
epochs = {epochs}
patience = 5
"""


def write_ini(path, seed=0, epochs=3):
    with open(path, "w") as fh:
        fh.write(SMALL_INI.format(seed=seed, epochs=epochs))
    return str(path)


def run_pipeline(root, seed=0, epochs=3):
    """synth corpus -> build-dataset -> train -> evaluate (test split); returns the root dir."""
    root = str(root)
    os.makedirs(root, exist_ok=True)
    ini = write_ini(os.path.join(root, "run.ini"), seed, epochs)
    corpus, ds, tr, ev = (os.path.join(root, x) for x in ("corpus", "ds", "tr", "ev"))
    assert main(["synth", "--config", ini, "--out", corpus]) == 0
    data = [f"data.embeddings={corpus}/embeddings.bin", f"data.docs={corpus}/docs.tsv",
            f"data.doc_events={corpus}/doc_events.tsv"]
    assert main(["build-dataset", "--config", ini, "--out", ds] + sum((["--set", d] for d in data), [])) == 0
    assert main(["train", "--config", ini, "--dataset", ds, "--out", tr]) == 0
    assert main(["evaluate", "--config", ini, "--dataset", ds, "--checkpoint", f"{tr}/model.ckpt",
                 "--out", ev]) == 0
    return root


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("pipeline"))
