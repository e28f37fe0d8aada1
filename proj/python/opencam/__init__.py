"""Python interface to the opencam optical encryption toolkit."""

import json

from ._core import (
    Key,
    OpenCamError,
    __version__,
    autocorrelation,
    forward_double,
    forward_single,
    full_convolve,
    generate_key,
    ikpa,
    keyed_decrypt,
    load_key,
    mse,
    psf_impulse_likeness,
    psnr,
    read_tensor,
    scale_optimal_error,
    ssim,
    support_iou,
    synthetic_scene,
    uikpa,
    wiener_decrypt,
    write_tensor,
)
from ._core import run_study as _run_study


def run_study(config, attack="keyed"):
    """Runs a keyed or attack study from a config dict and returns its summary dict."""
    return json.loads(_run_study(json.dumps(config), attack))


def key_spec(key):
    """Returns the key's generation parameters as a dict."""
    return json.loads(key.spec)
