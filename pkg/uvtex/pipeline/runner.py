"""
Pipeline Runner

Runs the reconstruction stages in order:

    register -> project -> inpaint -> fuse -> invert -> correct -> enhance

Each stage writes its artifacts under the output directory and the runner
reads them back before the next stage, so a resumed run and a fresh run
feed identical bytes to every later stage. The one exception is T_opt: when
the correct stage has just run, enhancement receives the unquantized
texture it produced rather than the 16-bit PNG. Output layout:

    register/registered.obj
    project/T_proj.png, project/T_proj.mask.png, project/camera.json
    inpaint/T_sd.png            (skipped without T_init)
    fuse/T_init.png             (skipped without T_init)
    generator/model.texgen      (when the model is fitted by the run)
    invert/latent.npy, invert/T_inv.png
    correct/latent.npy, correct/T_opt.png
    final/texture.png
    traces/nicp.csv, traces/invert.csv, traces/correct.csv
    config.json, report.json    (report only with a ground-truth texture)
"""

import json
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..common.errors import ConfigError, GeneratorError, StageError, UvtexError
from ..common.imageio import load_image, quantize
from ..common.log import get_logger
from ..enhance.schedule import timestep_for_strength
from ..enhance.sdedit import enhance_texture
from ..fusion.fuse import fuse
from ..generator.corpus import iter_corpus, load_corpus
from ..generator.model import GeneratorModel, fit_pca, load_model, save_model
from ..geometry.camera import Camera
from ..geometry.mesh import Mesh, load_obj, save_obj
from ..inpaint.inpaint import inpaint
from ..metrics.report import MetricReport, evaluate_renders, evaluate_textures, generate_report
from ..optimize.invert import TraceRow, correct_latent, invert_latent, write_trace_csv
from ..optimize.latent import DiffusionLatentSpace, GeneratorLatentSpace, LatentSpace
from ..optimize.render import build_render_map
from ..projection.coverage import UvCoverage, build_uv_coverage
from ..projection.project import project_texture
from ..projection.texture import TextureMap, load_texture, save_texture
from ..registration.nicp import NicpIteration, load_landmarks, nicp_register
from .config import LatentKind, PipelineConfig, save_config

logger = get_logger(__name__)

STAGES = ("register", "project", "inpaint", "fuse", "invert", "correct", "enhance")
LOCK_NAME = ".uvtex.lock"
MODEL_PATH = Path("generator") / "model.texgen"


@dataclass
class PipelineResult:
    """What a run produced."""

    output_dir: Path
    textures: dict[str, Path] = field(default_factory=dict)
    reports: list[MetricReport] = field(default_factory=list)
    summary: str = ""


def _write_nicp_trace(path: Path, history: list[NicpIteration]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["stiffness,iteration,objective,displacement,active"]
    lines += [
        f"{h.stiffness!r},{h.iteration},{h.objective!r},{h.displacement!r},{h.active}"
        for h in history
    ]
    path.write_text("\n".join(lines) + "\n")


class PipelineRunner:
    """
    Runs one configuration against one output directory.

    The output directory is held with a lock file for the duration of the
    run. With `resume`, a stage whose artifacts already exist is loaded
    instead of recomputed.
    """

    def __init__(
        self,
        config: PipelineConfig,
        resume: bool = False,
        model: Optional[GeneratorModel] = None,
    ):
        """
        Args:
            config: Validated at the start of run()
            resume: Reuse existing stage artifacts
            model: Generator to use instead of config.generator
        """
        self.config = config
        self.resume = resume
        self.out = config.output_dir
        self._model = model

    # ------------------------------------------------------------------
    # Plumbing
    # ------------------------------------------------------------------

    def _path(self, *parts: str) -> Path:
        return self.out.joinpath(*parts)

    def _acquire_lock(self) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        lock = self._path(LOCK_NAME)
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(f"output directory {self.out} is in use ({lock} exists)")
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return lock

    def _stage(self, name: str, fn: Callable, *args):
        logger.info(f"[stage] {name}")
        start_time = time.time()
        try:
            result = fn(*args)
        except StageError:
            raise
        except UvtexError as e:
            raise StageError(name, e) from e
        elapsed_ms = int((time.time() - start_time) * 1000)
        logger.info(f"[timing] {name} {elapsed_ms}ms")
        return result

    def _texture(
        self,
        stage: str,
        name: str,
        compute: Callable[[], TextureMap],
        in_memory: bool = False,
    ) -> TextureMap:
        """
        Compute, save and reload a texture artifact (or just reload on resume).

        With `in_memory`, a freshly computed texture is returned as is
        instead of its clamped, quantized reload.
        """
        base = self._path(stage, name)
        if not (self.resume and base.with_name(name + ".png").exists()):
            texture = compute()
            save_texture(texture, base)
            if in_memory:
                return texture
        return load_texture(base)

    def _latent(self, stage: str, compute: Callable[[], np.ndarray]) -> np.ndarray:
        path = self._path(stage, "latent.npy")
        if not (self.resume and path.exists()):
            path.parent.mkdir(parents=True, exist_ok=True)
            np.save(path, np.asarray(compute(), dtype=np.float64))
        return np.load(path)

    # ------------------------------------------------------------------
    # Stages
    # ------------------------------------------------------------------

    def _register(self) -> Mesh:
        path = self._path("register", "registered.obj")
        if not (self.resume and path.exists()):
            template = load_obj(self.config.paths.template)
            if self.config.stages.register:
                params = self.config.nicp
                if self.config.paths.landmarks:
                    params = replace(params, landmarks=load_landmarks(self.config.paths.landmarks))
                history: list[NicpIteration] = []
                mesh = nicp_register(template, load_obj(self.config.paths.target), params, history)
                _write_nicp_trace(self._path("traces", "nicp.csv"), history)
            else:
                mesh = template
            save_obj(mesh, path)
        return load_obj(path)

    def _camera(self, mesh: Mesh, image: np.ndarray) -> Camera:
        height, width = image.shape[:2]
        camera = self.config.camera.to_camera(mesh, width, height)
        path = self._path("project", "camera.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(camera.to_dict(), indent=2) + "\n")
        return camera

    def _project(
        self, mesh: Mesh, camera: Camera, image: np.ndarray, coverage: UvCoverage
    ) -> TextureMap:
        tex = self.config.texture
        return self._texture(
            "project",
            "T_proj",
            lambda: project_texture(
                mesh, camera, image, tex.size, tex.depth_bias, coverage, tex.erode
            ),
        )

    def _inpaint(self, t_proj: TextureMap, coverage: UvCoverage) -> TextureMap:
        return self._texture(
            "inpaint", "T_sd", lambda: inpaint(t_proj, self.config.inpainter, coverage.covered)
        )

    def _fuse(self, t_proj: TextureMap, t_sd: TextureMap, coverage: UvCoverage) -> TextureMap:
        return self._texture(
            "fuse",
            "T_init",
            lambda: fuse(
                t_proj, t_sd, coverage.covered, preconditioner=self.config.texture.preconditioner
            ),
        )

    def _generator(self, coverage: UvCoverage) -> GeneratorModel:
        if self._model is not None:
            return self._model
        gen = self.config.generator
        if gen.model:
            model = load_model(gen.model)
        else:
            path = self._path(str(MODEL_PATH))
            if not (self.resume and path.exists()):
                save_model(self._fit_generator(coverage), path)
            model = load_model(path)
        if model.size != self.config.texture.size:
            raise GeneratorError(
                f"generator S={model.size} does not match texture.size={self.config.texture.size}"
            )
        self._model = model
        return model

    def _fit_generator(self, coverage: UvCoverage) -> GeneratorModel:
        gen = self.config.generator
        size = self.config.texture.size
        if gen.corpus_dir:
            textures = iter(load_corpus(gen.corpus_dir))
        else:
            textures = iter_corpus(
                gen.layout, gen.corpus_size, size, self.config.seeds.corpus, gen.style
            )
        # uint16 keeps the corpus small and matches what a saved corpus reloads as
        data = np.stack([quantize(t.rgb, 16) for t in textures])
        return fit_pca(
            data, gen.d_w, seed=self.config.seeds.model, d_z=gen.d_z, coverage=coverage.covered
        )

    def _invert(
        self, model: GeneratorModel, t_proj: TextureMap, t_init: Optional[TextureMap]
    ) -> tuple[LatentSpace, np.ndarray]:
        stages = self.config.stages
        target = t_init if stages.use_init else t_proj
        dump_dir = self._path("invert", "dumps") if self.config.schedule.dump_every > 0 else None

        if stages.latent_space == LatentKind.GENERATOR:
            space: LatentSpace = GeneratorLatentSpace(model)

            def compute() -> np.ndarray:
                trace: list[TraceRow] = []
                w, _ = invert_latent(model, target, self.config.schedule, trace, dump_dir)
                write_trace_csv(self._path("traces", "invert.csv"), trace)
                return w

        else:
            settings = self.config.enhance
            schedule = settings.schedule()
            t_star = timestep_for_strength(settings.strength, schedule.steps)
            space = DiffusionLatentSpace(model, schedule, t_star)

            def compute() -> np.ndarray:
                start = target.rgb
                if not stages.use_init:
                    start = np.where(t_proj.valid[:, :, None], t_proj.rgb, model.mean_texture())
                if settings.deterministic_noise:
                    eps = np.zeros(model.n_values)
                else:
                    rng = np.random.default_rng(self.config.seeds.noise)
                    eps = rng.standard_normal(model.n_values)
                return space.encode(start, eps)

        latent = self._latent("invert", compute)
        shape = (model.size, model.size, 3)
        self._texture(
            "invert",
            "T_inv",
            lambda: TextureMap(space.decode(latent).reshape(shape), model.coverage),
        )
        return space, latent

    def _correct(
        self,
        model: GeneratorModel,
        space: LatentSpace,
        latent: np.ndarray,
        mesh: Mesh,
        camera: Camera,
        image: np.ndarray,
    ) -> TextureMap:
        render_map = build_render_map(mesh, camera, camera.width, camera.height, model.size)
        dump_dir = self._path("correct", "dumps") if self.config.schedule.dump_every > 0 else None
        result: dict[str, TextureMap] = {}

        def compute() -> np.ndarray:
            trace: list[TraceRow] = []
            x, texture = correct_latent(
                model,
                latent,
                render_map,
                image,
                self.config.loss,
                self.config.schedule,
                space=space,
                trace=trace,
                dump_dir=dump_dir,
            )
            write_trace_csv(self._path("traces", "correct.csv"), trace)
            result["T_opt"] = texture
            return x

        x = self._latent("correct", compute)
        shape = (model.size, model.size, 3)
        return self._texture(
            "correct",
            "T_opt",
            lambda: result.get("T_opt", TextureMap(space.decode(x).reshape(shape), model.coverage)),
            in_memory=True,
        )

    def _enhance(
        self,
        model: GeneratorModel,
        t_opt: TextureMap,
        reference: TextureMap,
        visible: np.ndarray,
    ) -> TextureMap:
        def compute() -> TextureMap:
            if not self.config.stages.enhance:
                return t_opt
            return enhance_texture(
                t_opt,
                self.config.enhance,
                model,
                seed=self.config.seeds.noise,
                reference=reference,
                visible=visible,
            )

        return self._texture("final", "texture", compute)

    def _metrics(
        self, textures: dict[str, TextureMap], visible: np.ndarray, render_map
    ) -> tuple[list[MetricReport], str]:
        truth = load_texture(self.config.paths.ground_truth)
        reports: list[MetricReport] = []
        for label, texture in textures.items():
            reports += evaluate_textures(texture, truth, visible, label)
            reports += evaluate_renders(render_map, texture, truth, label)
        summary = generate_report(reports, self._path("report.json"))
        return reports, summary

    # ------------------------------------------------------------------
    # Entry point
    # ------------------------------------------------------------------

    def run(self) -> PipelineResult:
        """
        Execute every stage.

        Raises:
            ConfigError: invalid configuration or a locked output directory
            StageError: a stage failed; earlier artifacts are left in place
        """
        config = self.config
        config.validate()
        lock = self._acquire_lock()
        start_time = time.time()
        try:
            # written without output_dir
            save_config(
                replace(config, paths=replace(config.paths, output_dir=".")),
                self._path("config.json"),
            )
            result = PipelineResult(output_dir=self.out)

            mesh = self._stage("register", self._register)
            image = load_image(config.paths.image)
            camera = self._camera(mesh, image)
            coverage = build_uv_coverage(mesh, config.texture.size)

            t_proj = self._stage("project", self._project, mesh, camera, image, coverage)
            textures: dict[str, TextureMap] = {}
            t_init = None
            if config.stages.use_init:
                textures["T_sd"] = self._stage("inpaint", self._inpaint, t_proj, coverage)
                t_init = self._stage("fuse", self._fuse, t_proj, textures["T_sd"], coverage)
                textures["T_init"] = t_init
            else:
                logger.info("[stage] inpaint and fuse skipped (no T_init)")

            def invert():
                model = self._generator(coverage)
                return model, *self._invert(model, t_proj, t_init)

            model, space, latent = self._stage("invert", invert)
            textures["T_inv"] = load_texture(self._path("invert", "T_inv"))
            t_opt = self._stage("correct", self._correct, model, space, latent, mesh, camera, image)
            textures["T_opt"] = load_texture(self._path("correct", "T_opt"))
            reference = t_init if t_init is not None else t_proj
            final = self._stage("enhance", self._enhance, model, t_opt, reference, t_proj.valid)
            textures["final"] = final

            for label, path in (
                ("T_proj", self._path("project", "T_proj.png")),
                ("T_sd", self._path("inpaint", "T_sd.png")),
                ("T_init", self._path("fuse", "T_init.png")),
                ("T_inv", self._path("invert", "T_inv.png")),
                ("T_opt", self._path("correct", "T_opt.png")),
                ("final", self._path("final", "texture.png")),
            ):
                if label in textures or label == "T_proj":
                    result.textures[label] = path

            if config.paths.ground_truth:
                render_map = build_render_map(mesh, camera, camera.width, camera.height, model.size)
                result.reports, result.summary = self._stage(
                    "metrics", self._metrics, textures, t_proj.valid, render_map
                )
        finally:
            lock.unlink(missing_ok=True)

        elapsed_ms = int((time.time() - start_time) * 1000)
        logger.info(f"[timing] pipeline {elapsed_ms}ms")
        return result


def run_pipeline(
    config: PipelineConfig,
    resume: bool = False,
    model: Optional[GeneratorModel] = None,
) -> PipelineResult:
    """Run the whole pipeline; see PipelineRunner."""
    return PipelineRunner(config, resume=resume, model=model).run()
