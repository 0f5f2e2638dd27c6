import pytest

from phqreg.synth import SynthSpec, gen_synthetic


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Transcript-only corpus: fast, enough for behavioral/text pipelines."""
    root = tmp_path_factory.mktemp("corpus_small")
    spec = SynthSpec(n_train=30, n_dev=10, modalities=("transcript",), turn_pairs=8)
    gen_synthetic(spec, root, seed=101)
    return root


@pytest.fixture(scope="session")
def full_corpus(tmp_path_factory):
    """All three modalities, long enough sessions for visual windows."""
    root = tmp_path_factory.mktemp("corpus_full")
    spec = SynthSpec(
        n_train=6, n_dev=3, modalities=("transcript", "audio", "landmarks"),
        turn_pairs=16, fail_prob=0.01,
    )
    gen_synthetic(spec, root, seed=202)
    return root
