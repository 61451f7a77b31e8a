import numpy as np
import pytest

import smfbuild
from midyn import midi_ingest, vae


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Synthetic piano corpus: train/ with five pieces, plus a held-out file."""
    root = tmp_path_factory.mktemp("corpus")
    train = root / "train"
    train.mkdir()
    heldout = root / "heldout.mid"
    bar_counts = smfbuild.write_corpus(train, heldout)
    return {"root": root, "train": train, "heldout": heldout,
            "bar_counts": bar_counts}


@pytest.fixture(scope="session")
def corpus_bars(corpus):
    """Bar vectors for every training piece plus the held-out piece."""
    out = {}
    for path in sorted(corpus["train"].glob("*.mid")):
        out[path.name] = midi_ingest.bars_from_midi_bytes(path.read_bytes())
    out["heldout.mid"] = midi_ingest.bars_from_midi_bytes(
        corpus["heldout"].read_bytes())
    return out


@pytest.fixture(scope="session")
def quick_params(tmp_path_factory, corpus_bars):
    """A cheaply trained model, wide enough that huge bit pools still fit.

    Components shed at most ~538 bits before their residual variance
    underflows to zero, so a 10000 bit pool needs a few dozen latent
    dimensions to land somewhere.
    """
    dataset = [b.values for b in corpus_bars["scales.mid"]]
    dataset += [b.values for b in corpus_bars["chords.mid"]]
    config = vae.VaeTrainConfig(epochs=3, batch_size=16, latent_dim=32,
                                rng_seed=11)
    params, _ = vae.train(dataset, config)
    path = tmp_path_factory.mktemp("params") / "quick.bin"
    vae.save_params(params, str(path))
    return {"params": params, "path": path}
