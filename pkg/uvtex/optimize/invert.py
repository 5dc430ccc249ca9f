"""
Latent optimization.

invert_latent fits the generator to a texture (Z steps, then W steps) under
a masked mean absolute error. correct_latent refines a latent against the
input photo through the frozen render map and the compound loss and returns
the lowest-loss iterate it evaluated.

Both loops append one TraceRow per evaluated step and use a fresh Adam
state per phase. invert_latent adds a final row for the returned latent.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..common.errors import ConfigError, OptimizationError
from ..common.log import get_logger
from ..generator.model import GeneratorModel, gen_flat, gen_vjp, map_vjp, map_z_to_w
from ..projection.texture import TextureMap, save_texture
from .adam import Adam
from .latent import GeneratorLatentSpace, LatentSpace
from .loss import LossTerms, LossWeights, total_loss
from .render import RenderMap, render_flat, render_vjp

logger = get_logger(__name__)

PathLike = Union[str, Path]

TRACE_HEADER = "step,total,l1,perc,reg"


@dataclass
class OptimSchedule:
    z_steps: int = 100
    w_steps: int = 500
    correct_steps: int = 100
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dump_every: int = 0

    def validate(self) -> None:
        if min(self.z_steps, self.w_steps, self.correct_steps, self.dump_every) < 0:
            raise ConfigError("schedule step counts must be non-negative")
        if self.lr <= 0:
            raise ConfigError(f"schedule.lr must be positive, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("schedule betas must be in [0, 1)")
        if self.eps <= 0:
            raise ConfigError("schedule.eps must be positive")

    def optimizer(self) -> Adam:
        return Adam(lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)


@dataclass
class TraceRow:
    step: int
    terms: LossTerms

    def to_csv(self) -> str:
        t = self.terms
        return f"{self.step},{t.total!r},{t.l1!r},{t.perc!r},{t.reg!r}"


def write_trace_csv(path: PathLike, trace: list[TraceRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [TRACE_HEADER] + [row.to_csv() for row in trace]
    path.write_text("\n".join(lines) + "\n")


def read_trace_csv(path: PathLike) -> list[TraceRow]:
    rows = []
    for line in Path(path).read_text().splitlines()[1:]:
        step, total, l1, perc, reg = line.split(",")
        rows.append(TraceRow(int(step), LossTerms(float(total), float(l1), float(perc), float(reg))))
    return rows


def _check_finite(value: float, step: int) -> None:
    if not np.isfinite(value):
        raise OptimizationError(f"non-finite loss {value}", step=step)


def _maybe_dump(dump_dir: Optional[PathLike], every: int, step: int, texture: TextureMap) -> None:
    if dump_dir is not None and every > 0 and step % every == 0:
        save_texture(texture, Path(dump_dir) / f"step_{step:05d}")


def masked_l1(
    model: GeneratorModel, w: np.ndarray, target: np.ndarray, valid: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean |gen(w) - target| over valid values, and its gradient wrt w."""
    count = valid.sum()
    residual = np.where(valid, gen_flat(model, w) - target, 0.0)
    loss = float(np.sum(np.abs(residual)) / count)
    return loss, gen_vjp(model, w, np.sign(residual) / count)


def invert_latent(
    model: GeneratorModel,
    target: TextureMap,
    schedule: Optional[OptimSchedule] = None,
    trace: Optional[list[TraceRow]] = None,
    dump_dir: Optional[PathLike] = None,
) -> tuple[np.ndarray, TextureMap]:
    """
    Find w_init whose generated texture matches `target` on its valid texels.

    z starts at 0, so the result is deterministic.

    Returns:
        (w_init, gen_texture(w_init))

    Raises:
        OptimizationError: non-finite loss (with step) or no valid texels
    """
    schedule = schedule or OptimSchedule()
    schedule.validate()
    if target.size != model.size:
        raise OptimizationError(f"target S={target.size} does not match model S={model.size}")
    valid = np.repeat(target.valid.reshape(-1), 3)
    if not valid.any():
        raise OptimizationError("target texture has no valid texels")
    goal = target.rgb.reshape(-1)
    trace = trace if trace is not None else []

    def record(step: int, loss: float, w: np.ndarray) -> None:
        _check_finite(loss, step)
        trace.append(TraceRow(step, LossTerms(total=loss, l1=loss, perc=0.0, reg=0.0)))
        if dump_dir is not None:
            texture = TextureMap(gen_flat(model, w).reshape(model.size, model.size, 3), model.coverage)
            _maybe_dump(dump_dir, schedule.dump_every, step, texture)

    step = 0
    z = np.zeros(model.d_z)
    adam = schedule.optimizer()
    for _ in range(schedule.z_steps):
        w = map_z_to_w(model, z)
        loss, grad_w = masked_l1(model, w, goal, valid)
        record(step, loss, w)
        z = adam.step(z, map_vjp(model, z, grad_w))
        step += 1

    w = map_z_to_w(model, z)
    adam = schedule.optimizer()
    for _ in range(schedule.w_steps):
        loss, grad_w = masked_l1(model, w, goal, valid)
        record(step, loss, w)
        w = adam.step(w, grad_w)
        step += 1

    loss, _ = masked_l1(model, w, goal, valid)
    record(step, loss, w)
    logger.info(f"[invert] steps={step} l1={loss:.6f} |w|={float(np.linalg.norm(w)):.4f}")
    rgb = gen_flat(model, w).reshape(model.size, model.size, 3)
    return w, TextureMap(rgb=rgb, mask=model.coverage.copy())


def correction_objective(
    space: LatentSpace,
    render_map: RenderMap,
    image: np.ndarray,
    mask: np.ndarray,
    x: np.ndarray,
    anchor: np.ndarray,
    weights: LossWeights,
) -> tuple[LossTerms, np.ndarray]:
    """Compound loss of decode(x) rendered through the map, and dL/dx."""
    rendered = render_flat(render_map, space.decode(x))
    terms, grad_image, grad_reg = total_loss(rendered, mask, image, x, anchor, weights)
    grad_texture = render_vjp(render_map, grad_image)
    return terms, space.vjp(x, grad_texture) + grad_reg


def correct_latent(
    model: GeneratorModel,
    w_init: np.ndarray,
    render_map: RenderMap,
    image: np.ndarray,
    weights: Optional[LossWeights] = None,
    schedule: Optional[OptimSchedule] = None,
    space: Optional[LatentSpace] = None,
    image_mask: Optional[np.ndarray] = None,
    trace: Optional[list[TraceRow]] = None,
    dump_dir: Optional[PathLike] = None,
) -> tuple[np.ndarray, TextureMap]:
    """
    Descend the render loss from w_init, regularized toward w_init.

    Args:
        model: Generator (supplies coverage and the default space)
        w_init: Starting latent in `space`
        render_map: Frozen map for the input camera
        image: (H, W, 3) input photo
        weights: Loss weights
        schedule: Uses correct_steps and the Adam settings
        space: Search space; the generator's W when None
        image_mask: Optional (H, W) pixels of the photo to trust

    Returns:
        (x*, decoded texture), x* being the evaluated iterate of least loss
    """
    weights = weights or LossWeights()
    schedule = schedule or OptimSchedule()
    weights.validate()
    schedule.validate()
    space = space or GeneratorLatentSpace(model)
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (render_map.height, render_map.width, 3):
        raise OptimizationError(
            f"image shape {image.shape} does not match render map "
            f"{render_map.width}x{render_map.height}"
        )
    mask = render_map.mask if image_mask is None else render_map.mask & np.asarray(image_mask, bool)
    anchor = np.asarray(w_init, dtype=np.float64).copy()
    x = anchor.copy()
    trace = trace if trace is not None else []
    shape = (model.size, model.size, 3)

    adam = schedule.optimizer()
    best_x, best_total, best_step = x, np.inf, 0
    for step in range(schedule.correct_steps + 1):
        terms, grad = correction_objective(space, render_map, image, mask, x, anchor, weights)
        _check_finite(terms.total, step)
        trace.append(TraceRow(step, terms))
        # strict, so ties keep the earliest iterate
        if terms.total < best_total:
            best_x, best_total, best_step = x, terms.total, step
        if dump_dir is not None:
            texture = TextureMap(space.decode(x).reshape(shape), model.coverage)
            _maybe_dump(dump_dir, schedule.dump_every, step, texture)
        if step < schedule.correct_steps:
            x = adam.step(x, grad)

    first = trace[-schedule.correct_steps - 1].terms
    logger.info(
        f"[correct] space={getattr(space, 'name', type(space).__name__)} "
        f"steps={schedule.correct_steps} loss {first.total:.6f} -> {best_total:.6f} "
        f"(best at step {best_step})"
    )
    return best_x, TextureMap(rgb=space.decode(best_x).reshape(shape), mask=model.coverage.copy())
