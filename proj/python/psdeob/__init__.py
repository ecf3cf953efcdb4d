# SPDX-License-Identifier: Apache-2.0
"""Static PowerShell deobfuscation and URL extraction."""

import json as _json

from ._psdeob import (  # noqa: F401
    PsdeobError,
    __version__,
    build_cti_prompt,
    build_deobf_prompt,
    decode_input,
    deobfuscate,
    eval_charcast,
    eval_format,
    eval_replace,
    eval_split,
    generate_corpus,
    parse_json_response,
    quote_ps_string,
    run_cli,
    url_to_domain,
    validate_url,
    write_corpus,
)
from . import _psdeob


def extract(data, fold_www=False):
    """URLs and domains found by the static engine in script bytes or text."""
    return _psdeob.extract(data, fold_www)


def cti(data):
    """Heuristic CTI report as a dict."""
    return _json.loads(_psdeob.cti_json(data))


def evaluate(corpus_dir, truth_path, jobs=1, lenient=False, fold_www=False):
    """Scores the static engine on a corpus; returns the report as a dict."""
    return _json.loads(_psdeob.evaluate_json(str(corpus_dir), str(truth_path), jobs, lenient, fold_www))
