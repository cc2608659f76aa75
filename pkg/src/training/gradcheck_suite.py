"""Finite-difference suite over every primitive and the tiny end-to-end model.

All checks run in float64. Primitive and composite checks must stay below
``PRIMITIVE_THRESHOLD``; the end-to-end model samples a handful of
coordinates per parameter and must stay below ``MODEL_THRESHOLD``.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from src.config.config_models import LossConfig, ModelConfig
from src.losses.objectives import dw_seg_loss, recon_loss, total_loss
from src.losses.targets import build_weights, soft_gt
from src.model.layers import block_forward, licm_forward, mhsa, mlp
from src.model.params import SenetParams
from src.model.patches import make_mask_plan
from src.model.senet import SenetModel
from src.tensor import ops
from src.tensor.gradcheck import check_parameters, finite_diff_check
from src.tensor.prng import Prng
from src.tensor.tensor import Tensor

PRIMITIVE_THRESHOLD = 1e-6
MODEL_THRESHOLD = 1e-4
F64 = np.float64


@dataclass
class GradCheckResult:
    name: str
    error: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.error < self.threshold


def tiny_model_config(seed: int = 0, licm_enabled: bool = True) -> ModelConfig:
    """img 16, patch 8, dims 8, depth 1, in float64."""
    return ModelConfig(
        img_size=16,
        patch_size=8,
        enc_dim=8,
        enc_depth=1,
        enc_heads=2,
        dec_dim=8,
        dec_depth=1,
        dec_heads=2,
        mlp_ratio=4,
        licm_channels=2,
        head_channels=4,
        licm_enabled=licm_enabled,
        seed=seed,
        dtype="float64",
    )


def randomise(params: SenetParams, rng: Prng, std: float = 0.3) -> None:
    """Replace every value (zero-initialised ones included) with normal draws."""
    for _, tensor in params.items():
        tensor.data = np.ascontiguousarray(rng.normal(tensor.shape, std=std), dtype=F64)


def _tensor(rng: Prng, *shape: int, low: float = -1.0, high: float = 1.0) -> Tensor:
    return Tensor(rng.uniform(shape, low, high), dtype=F64)


def _projected(op: Callable[[Tensor], Tensor], out_shape, rng: Prng) -> Callable[[Tensor], Tensor]:
    """Scalarise ``op`` with a fixed random projection so no output direction is skipped."""
    weights = rng.uniform(out_shape, -1.0, 1.0)
    return lambda x: ops.sum_all(op(x) * weights)


def _unary_checks(rng: Prng) -> Dict[str, float]:
    x = _tensor(rng, 3, 4)
    positive = _tensor(rng, 3, 4, low=0.2, high=2.0)
    other = _tensor(rng, 3, 4)
    nonzero = _tensor(rng, 3, 4, low=0.5, high=2.0)
    checks = {
        "add": (lambda t: ops.add(t, other), x),
        "sub": (lambda t: ops.sub(other, t), x),
        "mul": (lambda t: ops.mul(t, other), x),
        "div.numerator": (lambda t: ops.div(t, nonzero), x),
        "div.denominator": (lambda t: ops.div(other, t), nonzero),
        "neg": (ops.neg, x),
        "exp": (ops.exp, x),
        "log": (ops.log, positive),
        "sigmoid": (ops.sigmoid, x),
        "gelu": (ops.gelu, x),
        "reshape": (lambda t: ops.reshape(t, (4, 3)), x),
        "transpose": (lambda t: ops.transpose(t, (1, 0)), x),
        "take_rows": (lambda t: ops.take_rows(t, [2, 0, 2]), x),
        "concat_rows": (lambda t: ops.concat_rows([t, ops.mul(t, t)]), x),
        "softmax_lastdim": (ops.softmax_lastdim, x),
    }
    errors = {}
    for name, (op, point) in checks.items():
        out_shape = op(point).shape
        errors[name] = finite_diff_check(_projected(op, out_shape, rng), point)
    errors["sum_all"] = finite_diff_check(lambda t: ops.sum_all(ops.mul(t, t)), x)
    errors["mean_all"] = finite_diff_check(lambda t: ops.mean_all(ops.exp(t)), x)
    row = _tensor(rng, 1, 4)
    errors["broadcast_to"] = finite_diff_check(
        _projected(lambda t: ops.broadcast_to(t, (3, 4)), (3, 4), rng), row
    )
    return errors


def _product_checks(rng: Prng) -> Dict[str, float]:
    a, b = _tensor(rng, 3, 4), _tensor(rng, 4, 5)
    x, kernel, bias = _tensor(rng, 2, 5, 5), _tensor(rng, 2, 2, 3, 3), _tensor(rng, 2)
    v, gamma, beta = _tensor(rng, 3, 6), _tensor(rng, 6, low=0.5, high=1.5), _tensor(rng, 6)
    batch = _tensor(rng, 3, 2, 4, 4)
    return {
        "matmul.a": finite_diff_check(_projected(lambda t: ops.matmul(t, b), (3, 5), rng), a),
        "matmul.b": finite_diff_check(_projected(lambda t: ops.matmul(a, t), (3, 5), rng), b),
        "conv2d_3x3_same.x": finite_diff_check(
            _projected(lambda t: ops.conv2d_3x3_same(t, kernel, bias), (2, 5, 5), rng), x
        ),
        "conv2d_3x3_same.kernel": finite_diff_check(
            _projected(lambda t: ops.conv2d_3x3_same(x, t, bias), (2, 5, 5), rng), kernel
        ),
        "conv2d_3x3_same.bias": finite_diff_check(
            _projected(lambda t: ops.conv2d_3x3_same(x, kernel, t), (2, 5, 5), rng), bias
        ),
        "conv2d_3x3_same.batched_x": finite_diff_check(
            _projected(lambda t: ops.conv2d_3x3_same(t, kernel, bias), (3, 2, 4, 4), rng), batch
        ),
        "conv2d_3x3_same.batched_kernel": finite_diff_check(
            _projected(lambda t: ops.conv2d_3x3_same(batch, t, bias), (3, 2, 4, 4), rng), kernel
        ),
        "conv2d_3x3_same.batched_bias": finite_diff_check(
            _projected(lambda t: ops.conv2d_3x3_same(batch, kernel, t), (3, 2, 4, 4), rng), bias
        ),
        "layer_norm.x": finite_diff_check(
            _projected(lambda t: ops.layer_norm(t, gamma, beta), (3, 6), rng), v
        ),
        "layer_norm.gamma": finite_diff_check(
            _projected(lambda t: ops.layer_norm(v, t, beta), (3, 6), rng), gamma
        ),
        "layer_norm.beta": finite_diff_check(
            _projected(lambda t: ops.layer_norm(v, gamma, t), (3, 6), rng), beta
        ),
    }


def _loss_checks(rng: Prng) -> Dict[str, float]:
    target = rng.uniform((8, 8))
    pred = _tensor(rng, 8, 8, low=0.05, high=0.95)
    mask = np.zeros((4, 4))
    mask[1:3, 1:4] = 1.0
    loss_cfg = LossConfig()
    gt = soft_gt(mask, 8, 8)
    weights = build_weights(gt, loss_cfg)
    image = rng.uniform((3, 8, 8))
    plan = make_mask_plan(4, 0.5, rng)
    return {
        "mse_mean": finite_diff_check(lambda t: ops.mse_mean(t, target), pred),
        "bce_map": finite_diff_check(_projected(lambda t: ops.bce_map(t, target), (8, 8), rng), pred),
        "dw_seg_loss": finite_diff_check(lambda t: dw_seg_loss(t, gt, weights, loss_cfg), pred),
        "recon_loss": finite_diff_check(
            lambda t: recon_loss(ops.reshape(t, (3, 8, 8)), image, plan, 4),
            _tensor(rng, 3 * 8 * 8),
        ),
    }


def _layer_checks(rng: Prng) -> Dict[str, Dict[str, float]]:
    cfg = tiny_model_config()
    params = SenetParams.initialise(cfg)
    randomise(params, rng)
    prefix = "encoder.blocks.0"
    x = _tensor(rng, 3, cfg.enc_dim)
    composites = {
        "mhsa": lambda t: mhsa(t, params, f"{prefix}.attn", cfg.enc_heads),
        "mlp": lambda t: mlp(t, params, f"{prefix}.mlp"),
        "licm_forward": lambda t: licm_forward(t, params, f"{prefix}.licm_a", cfg.patch_size, cfg.licm_channels),
        "block_forward": lambda t: block_forward(
            t, params, prefix, cfg.enc_heads, cfg.patch_size, cfg.licm_channels, True
        ),
    }
    errors = {}
    for name, op in composites.items():
        errors[name] = finite_diff_check(_projected(op, x.shape, rng), x)
    return errors


def model_gradient_errors(seed: int = 0, max_coords: int = 6) -> Dict[str, float]:
    """Per-parameter error of the full mixed objective on the tiny model."""
    rng = Prng.from_key(seed, 7)
    cfg = tiny_model_config(seed)
    model = SenetModel(cfg)
    randomise(model.params, rng)

    image = rng.uniform((3, cfg.img_size, cfg.img_size))
    mask = np.zeros((8, 8))
    mask[2:6, 3:7] = 1.0
    loss_cfg = LossConfig()
    gt = soft_gt(mask, cfg.img_size, cfg.img_size)
    weights = build_weights(gt, loss_cfg)
    plan = make_mask_plan(cfg.num_patches, 0.25, rng)

    def loss_fn() -> Tensor:
        recon, pred = model.forward(image, plan)
        l_seg = dw_seg_loss(pred, gt, weights, loss_cfg)
        l_recon = recon_loss(recon, image, plan, cfg.patch_size)
        return total_loss(l_recon, l_seg, loss_cfg.lam)

    return check_parameters(loss_fn, dict(model.params.items()), max_coords=max_coords, rng=rng)


def run_gradcheck_suite(seed: int = 0) -> List[GradCheckResult]:
    """Every check in a fixed order; the model check reports its worst parameter."""
    rng = Prng.from_key(seed, 6)
    results = []
    for group in (_unary_checks, _product_checks, _loss_checks, _layer_checks):
        for name, error in group(rng).items():
            results.append(GradCheckResult(name, error, PRIMITIVE_THRESHOLD))
    per_param = model_gradient_errors(seed)
    worst = max(per_param, key=per_param.get)
    results.append(GradCheckResult(f"senet_model ({worst})", per_param[worst], MODEL_THRESHOLD))
    return results
