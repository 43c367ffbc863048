"""Python access to the vpgraph core: parsing, fingerprints, the training
pipeline, evaluation and odor-detectability ranking."""

import json as _json

from . import _core
from ._core import (
    VpgError,
    __version__,
    binned_mse_json as _binned_mse_json,
    bootstrap_json as _bootstrap_json,
    c_air,
    canonical_key,
    ecfp_bits,
    featurize_csv,
    harmonize_op,
    harmonize_vp,
    lambda_eff,
    mae,
    mse,
    p_detect,
    r2,
    rank_csv,
    scaffold_key,
    synth_csv,
    tanimoto,
)


def molecule(smiles):
    return _json.loads(_core.molecule_json(smiles))


def default_config():
    return _json.loads(_core.default_config_json())


def config(toml_text=""):
    return _json.loads(_core.config_json(toml_text))


def split(corpus_jsonl, config_toml=""):
    return _json.loads(_core.split_jsonl(corpus_jsonl, config_toml))


def train(corpus_jsonl, split_csv, config_toml="", seed=0, out_dir=""):
    return _json.loads(_core.train_run(corpus_jsonl, split_csv, config_toml, seed, str(out_dir)))


def evaluate(run_dir, replicates=2000, seed=0):
    return _json.loads(_core.evaluate_dir(str(run_dir), replicates, seed))


def bootstrap_ci(keys, values, replicates=2000, level=0.95, seed=0):
    return _json.loads(_bootstrap_json(list(keys), list(values), replicates, level, seed))


def binned_mse(residuals, max_sims):
    return _json.loads(_binned_mse_json(list(residuals), list(max_sims)))
