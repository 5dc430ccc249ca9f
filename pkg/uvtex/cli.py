#!/usr/bin/env python3
"""
uvtex CLI

Single-image UV texture reconstruction, stage by stage or end to end.

Usage:
    python -m uvtex --help
    python -m uvtex make-fixture --out scene
    python -m uvtex pipeline --config scene/config.json
    python -m uvtex pipeline --config scene/config.json --ablation no-init
    python -m uvtex synth-corpus --n 10 --seed 1 --out corpus
    python -m uvtex metrics a.png b.png
    python -m uvtex list-ablations

Every subcommand accepts --config <file> and --set dotted.path=value
overrides. Exit codes: 0 success, 1 invalid configuration, 2 runtime error.
"""

import argparse
import sys
from pathlib import Path


def _load_config(args, check_files: bool = False):
    from .pipeline.config import load_config

    config = load_config(args.config, args.set)
    config.validate(check_files=check_files)
    return config


def _coverage(mesh_path: str | None, size: int):
    from .geometry.mesh import load_obj
    from .projection.coverage import build_uv_coverage

    if not mesh_path:
        return None
    return build_uv_coverage(load_obj(mesh_path), size).covered


def cmd_register(args):
    """Register the template mesh onto a target mesh."""
    from dataclasses import replace

    from .geometry.mesh import bbox_diagonal, load_obj, save_obj
    from .registration.nicp import load_landmarks, nicp_register

    config = _load_config(args)
    params = config.nicp
    if args.landmarks:
        params = replace(params, landmarks=load_landmarks(args.landmarks))
    template = load_obj(args.template)
    target = load_obj(args.target)
    history = []
    registered = nicp_register(template, target, params, history)
    save_obj(registered, args.out)
    print(f"Registered {registered.n_vertices} vertices in {len(history)} solves")
    print(f"Target bbox diagonal: {bbox_diagonal(target.vertices):.6g}")
    print(f"Mesh written to: {args.out}")


def cmd_project(args):
    """Project an image onto the mesh's UV layout (T_proj)."""
    from .common.imageio import load_image, save_gray
    from .geometry.mesh import load_obj
    from .projection.project import project_texture
    from .projection.texture import save_texture

    config = _load_config(args)
    mesh = load_obj(args.mesh)
    image = load_image(args.image)
    camera = config.camera.to_camera(mesh, image.shape[1], image.shape[0])
    texture = project_texture(
        mesh,
        camera,
        image,
        config.texture.size,
        config.texture.depth_bias,
        erode=config.texture.erode,
    )
    save_texture(texture, args.out)
    if args.visibility:
        save_gray(args.visibility, texture.mask)
    print(f"Visible texels: {int(texture.valid.sum())}/{texture.size ** 2}")
    print(f"Texture written to: {args.out}")


def cmd_inpaint(args):
    """Complete a partial texture (T_proj -> T_sd)."""
    from .inpaint.inpaint import inpaint
    from .projection.texture import load_texture, save_texture

    config = _load_config(args)
    partial = load_texture(args.input)
    completed = inpaint(partial, config.inpainter, _coverage(args.mesh, partial.size))
    save_texture(completed, args.out)
    print(f"Inpainter: {config.inpainter.kind.value}")
    print(f"Texture written to: {args.out}")


def cmd_fuse(args):
    """Poisson-fuse T_proj into T_sd (-> T_init)."""
    from .fusion.fuse import fuse
    from .projection.texture import load_texture, save_texture

    config = _load_config(args)
    t_proj = load_texture(args.proj)
    t_sd = load_texture(args.sd)
    fused = fuse(
        t_proj,
        t_sd,
        _coverage(args.mesh, t_sd.size),
        preconditioner=config.texture.preconditioner,
    )
    save_texture(fused, args.out)
    print(f"Texture written to: {args.out}")


def cmd_synth_corpus(args):
    """Write a synthetic texture corpus."""
    from .generator.corpus import save_corpus, synth_corpus

    config = _load_config(args)
    gen = config.generator
    n = args.n if args.n is not None else gen.corpus_size
    seed = args.seed if args.seed is not None else config.seeds.corpus
    size = args.size or config.texture.size
    corpus = synth_corpus(gen.layout, n, size, seed=seed, style=gen.style)
    paths = save_corpus(corpus, args.out)
    print(f"Wrote {len(paths)} textures ({size}x{size}) to: {args.out}")


def cmd_synth_masks(args):
    """Write visibility masks from random head poses."""
    from .geometry.mesh import load_obj
    from .projection.masks import save_masks, synth_masks

    config = _load_config(args)
    mesh = load_obj(args.mesh)
    seed = args.seed if args.seed is not None else config.seeds.masks
    masks = synth_masks(
        mesh,
        config.texture.size,
        args.n,
        seed=seed,
        image_size=args.image_size,
        depth_bias=config.texture.depth_bias,
    )
    paths = save_masks(masks, args.out)
    print(f"Wrote {len(paths)} masks to: {args.out}")


def cmd_fit_gen(args):
    """Fit the generator to a corpus directory (or a freshly synthesized corpus)."""
    import numpy as np

    from .common.imageio import quantize
    from .generator.corpus import iter_corpus, load_corpus
    from .generator.model import fit_pca, save_model

    config = _load_config(args)
    gen = config.generator
    if args.corpus:
        textures = load_corpus(args.corpus)
    else:
        textures = iter_corpus(
            gen.layout, gen.corpus_size, config.texture.size, config.seeds.corpus, gen.style
        )
    data = np.stack([quantize(t.rgb, 16) for t in textures])
    model = fit_pca(
        data,
        args.d_w or gen.d_w,
        seed=config.seeds.model,
        d_z=gen.d_z,
        coverage=_coverage(args.mesh, data.shape[1]),
    )
    save_model(model, args.out)
    print(f"Generator: S={model.size} d_w={model.d_w} d_z={model.d_z} from {len(data)} textures")
    print(f"Model written to: {args.out}")


def cmd_invert(args):
    """Invert a texture into the generator's latent space."""
    import numpy as np

    from .generator.model import load_model
    from .optimize.invert import invert_latent, write_trace_csv
    from .projection.texture import load_texture, save_texture

    config = _load_config(args)
    model = load_model(args.model)
    trace = []
    out = Path(args.out)
    dump_dir = out / "dumps" if config.schedule.dump_every > 0 else None
    w, texture = invert_latent(model, load_texture(args.input), config.schedule, trace, dump_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "latent.npy", w)
    save_texture(texture, out / "T_inv")
    write_trace_csv(out / "invert.csv", trace)
    print(f"Final masked L1: {trace[-1].terms.total:.6f} after {trace[-1].step} steps")
    print(f"Latent and texture written to: {out}")


def cmd_correct(args):
    """Refine a latent against the input image through the render loss."""
    import numpy as np

    from .common.imageio import load_image
    from .generator.model import load_model
    from .geometry.mesh import load_obj
    from .optimize.invert import correct_latent, write_trace_csv
    from .optimize.render import build_render_map
    from .projection.texture import save_texture

    config = _load_config(args)
    model = load_model(args.model)
    mesh = load_obj(args.mesh)
    image = load_image(args.image)
    height, width = image.shape[:2]
    camera = config.camera.to_camera(mesh, width, height)
    render_map = build_render_map(mesh, camera, width, height, model.size)
    trace = []
    w, texture = correct_latent(
        model, np.load(args.latent), render_map, image, config.loss, config.schedule, trace=trace
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "latent.npy", w)
    save_texture(texture, out / "T_opt")
    write_trace_csv(out / "correct.csv", trace)
    print(f"Loss: {trace[0].terms.total:.6f} -> {trace[-1].terms.total:.6f}")
    print(f"Latent and texture written to: {out}")


def cmd_enhance(args):
    """SDEdit-repaint a texture with the configured denoiser."""
    from .enhance.sdedit import enhance_texture
    from .generator.model import load_model
    from .projection.texture import load_texture, save_texture

    config = _load_config(args)
    settings = config.enhance
    if settings.detail_transfer:
        print("Warning: detail transfer needs T_init and visibility; disabled for this command")
        from dataclasses import replace

        settings = replace(settings, detail_transfer=False)
    model = load_model(args.model) if args.model else None
    texture = load_texture(args.input)
    out = enhance_texture(texture, settings, model, seed=config.seeds.noise)
    save_texture(out, args.out)
    print(f"Denoiser: {settings.denoiser.value}, strength {settings.strength:g}")
    print(f"Texture written to: {args.out}")


def cmd_metrics(args):
    """Compare two images or textures with PSNR and SSIM."""
    from .common.imageio import load_gray, load_image
    from .metrics.quality import psnr, ssim
    from .metrics.report import MetricReport, generate_report

    a = load_image(args.a)
    b = load_image(args.b)
    mask = load_gray(args.mask) if args.mask else None
    count = a.shape[0] * a.shape[1] if mask is None else int((mask > 0.5).sum())
    report = MetricReport(
        label=Path(args.a).stem,
        domain="image",
        region="visible" if mask is not None else "full",
        psnr=psnr(a, b, mask),
        ssim=ssim(a, b, mask),
        count=count,
    )
    print(generate_report([report], args.out))


def cmd_pipeline(args):
    """Run the full reconstruction pipeline."""
    from .pipeline.config import ABLATIONS, apply_ablation, get_ablation
    from .pipeline.runner import STAGES, run_pipeline

    config = _load_config(args)
    if args.ablation:
        setting = get_ablation(args.ablation)
        if setting is None:
            from .common.errors import ConfigError

            raise ConfigError(
                f"unknown ablation '{args.ablation}'; valid options: {sorted(ABLATIONS)}"
            )
        config = apply_ablation(config, setting)
    if args.out:
        from dataclasses import replace

        config = replace(config, paths=replace(config.paths, output_dir=args.out))

    print(f"Stages: {' -> '.join(STAGES)}")
    print(f"Output: {config.output_dir}")
    result = run_pipeline(config, resume=args.resume)
    for label, path in result.textures.items():
        print(f"  {label:<8} {path}")
    if result.summary:
        print(result.summary)


def cmd_make_fixture(args):
    """Write the synthetic end-to-end scene."""
    from .fixtures import make_fixture

    scene = make_fixture(
        args.out,
        size=args.size,
        image_size=args.image_size,
        corpus_size=args.corpus_size,
        d_w=args.d_w,
        seed=args.seed,
    )
    print(f"Scene written to: {scene.directory}")
    print(f"Run it with: python -m uvtex pipeline --config {scene.config_path}")


def cmd_list_ablations(args):
    """List the stage-toggle ablation settings."""
    from .pipeline.config import ABLATIONS, ALL_ABLATIONS

    print(f"{'Name':<8} {'T_init':<8} {'Latent':<11} {'Enhance':<8} Description")
    print("-" * 72)
    for setting in ALL_ABLATIONS:
        print(
            f"{setting.name:<8} {'yes' if setting.use_init else 'no':<8} "
            f"{setting.latent_space.value:<11} {'yes' if setting.enhance else 'no':<8} "
            f"{setting.description}"
        )
    aliases = [f"{name} = {s.name}" for name, s in ABLATIONS.items() if name != s.name]
    print(f"\nAliases: {', '.join(aliases)}")


def _add_common(parser):
    parser.add_argument("--config", "-c", help="Config file (JSON or YAML)")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config field by dotted path (repeatable)",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uvtex",
        description="Single-image UV texture reconstruction",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    p = subparsers.add_parser("register", help="Non-rigid registration of the template")
    p.add_argument("--template", required=True, help="Template OBJ")
    p.add_argument("--target", required=True, help="Target OBJ")
    p.add_argument("--landmarks", help="Landmark file (index x y z per line)")
    p.add_argument("--out", "-o", required=True, help="Registered OBJ")
    p.set_defaults(func=cmd_register)

    p = subparsers.add_parser("project", help="Project the image into UV space")
    p.add_argument("--mesh", required=True, help="Registered OBJ")
    p.add_argument("--image", required=True, help="Input image")
    p.add_argument("--out", "-o", required=True, help="Output texture base path")
    p.add_argument("--visibility", help="Also write the visibility mask here")
    p.set_defaults(func=cmd_project)

    p = subparsers.add_parser("inpaint", help="Complete a partial texture")
    p.add_argument("--in", dest="input", required=True, help="Partial texture")
    p.add_argument("--mesh", help="Mesh whose UV coverage bounds the fill")
    p.add_argument("--out", "-o", required=True, help="Output texture base path")
    p.set_defaults(func=cmd_inpaint)

    p = subparsers.add_parser("fuse", help="Poisson-fuse T_proj into T_sd")
    p.add_argument("--proj", required=True, help="T_proj texture")
    p.add_argument("--sd", required=True, help="T_sd texture")
    p.add_argument("--mesh", help="Mesh whose UV coverage is the solve domain")
    p.add_argument("--out", "-o", required=True, help="Output texture base path")
    p.set_defaults(func=cmd_fuse)

    p = subparsers.add_parser("fit-gen", help="Fit the generator")
    p.add_argument("--corpus", help="Corpus directory (synthesized when omitted)")
    p.add_argument("--d-w", type=int, help="Latent dimension")
    p.add_argument("--mesh", help="Mesh whose UV coverage marks valid generated texels")
    p.add_argument("--out", "-o", required=True, help="Model file")
    p.set_defaults(func=cmd_fit_gen)

    p = subparsers.add_parser("synth-corpus", help="Synthesize a texture corpus")
    p.add_argument("--n", type=int, help="Number of textures")
    p.add_argument("--seed", type=int, help="Corpus seed")
    p.add_argument("--size", type=int, help="Texture side")
    p.add_argument("--out", "-o", required=True, help="Output directory")
    p.set_defaults(func=cmd_synth_corpus)

    p = subparsers.add_parser("synth-masks", help="Synthesize visibility masks")
    p.add_argument("--mesh", required=True, help="Mesh OBJ")
    p.add_argument("--n", type=int, default=10, help="Number of masks")
    p.add_argument("--seed", type=int, help="Pose seed")
    p.add_argument("--image-size", type=int, default=256, help="Render frame side")
    p.add_argument("--out", "-o", required=True, help="Output directory")
    p.set_defaults(func=cmd_synth_masks)

    p = subparsers.add_parser("invert", help="Invert a texture into W")
    p.add_argument("--model", required=True, help="Generator model")
    p.add_argument("--in", dest="input", required=True, help="Target texture")
    p.add_argument("--out", "-o", required=True, help="Output directory")
    p.set_defaults(func=cmd_invert)

    p = subparsers.add_parser("correct", help="Render-based latent correction")
    p.add_argument("--model", required=True, help="Generator model")
    p.add_argument("--latent", required=True, help="Starting latent (.npy)")
    p.add_argument("--mesh", required=True, help="Registered OBJ")
    p.add_argument("--image", required=True, help="Input image")
    p.add_argument("--out", "-o", required=True, help="Output directory")
    p.set_defaults(func=cmd_correct)

    p = subparsers.add_parser("enhance", help="SDEdit enhancement")
    p.add_argument("--model", help="Generator model (projection denoiser)")
    p.add_argument("--in", dest="input", required=True, help="Input texture")
    p.add_argument("--out", "-o", required=True, help="Output texture base path")
    p.set_defaults(func=cmd_enhance)

    p = subparsers.add_parser("metrics", help="PSNR/SSIM between two images")
    p.add_argument("a", help="First image")
    p.add_argument("b", help="Second image")
    p.add_argument("--mask", help="Gray mask restricting the comparison")
    p.add_argument("--out", "-o", help="Write report.json here")
    p.set_defaults(func=cmd_metrics)

    p = subparsers.add_parser("pipeline", help="Run all stages")
    p.add_argument("--ablation", help="Ablation setting (see list-ablations)")
    p.add_argument("--out", "-o", help="Output directory (overrides paths.output_dir)")
    p.add_argument("--resume", action="store_true", help="Reuse existing stage artifacts")
    p.set_defaults(func=cmd_pipeline)

    p = subparsers.add_parser("make-fixture", help="Write the synthetic end-to-end scene")
    p.add_argument("--out", "-o", required=True, help="Scene directory")
    p.add_argument("--size", type=int, default=64, help="Texture side")
    p.add_argument("--image-size", type=int, default=128, help="Input image side")
    p.add_argument("--corpus-size", type=int, default=64, help="Corpus size for the generator")
    p.add_argument("--d-w", type=int, default=16, help="Latent dimension")
    p.add_argument("--seed", type=int, default=0, help="Scene seed")
    p.set_defaults(func=cmd_make_fixture)

    p = subparsers.add_parser("list-ablations", help="List ablation settings")
    p.set_defaults(func=cmd_list_ablations)

    for sub in subparsers.choices.values():
        _add_common(sub)
    return parser


def main(argv=None) -> int:
    from .common.errors import ConfigError, UvtexError
    from .common.log import configure_logging

    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    configure_logging(args.verbose)
    try:
        args.func(args)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except UvtexError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
