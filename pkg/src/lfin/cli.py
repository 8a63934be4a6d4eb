"""Command-line surface.

Subcommands: convert, degrade, train, infer, eval, info. Every command
exits 0 on success; failures print a single machine-parseable line
``error: <Kind>: <message>`` to stderr and exit 1.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures, pipeline, train as train_mod
from .errors import LfinError, ParameterError
from .metrics import aggregate
from .model import NetConfig, count_flops, count_params
from .scenes import LAYOUTS, discover_scenes, infer_layout, load_scene, save_scene
from .weights_io import load_weights, save_weights

_VARIANT_CLI = {"full": "full", "spatial-only": "spatial_only",
                "angular-only": "angular_only"}
_UPSAMPLE_CLI = {"pixel-shuffle": "pixel_shuffle", "nearest": "nearest",
                 "bilinear": "bilinear"}


def _read_config_file(path) -> dict:
    """Plain-text key=value config file."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"bad config line: {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val
    return out


def _net_config(args) -> NetConfig:
    values = {
        "n": args.n, "k": args.k, "c": args.c, "angres": args.angres,
        "scale": args.scale, "variant": args.variant,
        "ang_upsample": args.ang_upsample,
    }
    if getattr(args, "config_file", None):
        for key, val in _read_config_file(args.config_file).items():
            if key not in values:
                raise ParameterError(f"unknown config key {key!r}")
            values[key] = val
    if values["scale"] is None or values["angres"] is None:
        raise ParameterError("scale and angular resolution are required")
    return NetConfig(
        n_groups=int(values["n"]),
        blocks_per_group=int(values["k"]),
        channels=int(values["c"]),
        ang_res=int(values["angres"]),
        scale=int(values["scale"]),
        variant=_VARIANT_CLI[str(values["variant"])],
        ang_upsample=_UPSAMPLE_CLI[str(values["ang_upsample"])],
    )


def _add_config_flags(p: argparse.ArgumentParser, require_core: bool = True):
    p.add_argument("--scale", type=int, required=require_core, choices=(2, 4))
    p.add_argument("--angres", type=int, required=require_core)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--c", type=int, default=64)
    p.add_argument("--variant", choices=sorted(_VARIANT_CLI), default="full")
    p.add_argument("--ang-upsample", dest="ang_upsample",
                   choices=sorted(_UPSAMPLE_CLI), default="pixel-shuffle")
    p.add_argument("--config-file", dest="config_file", default=None)


def cmd_convert(args) -> int:
    scene = load_scene(args.inp, layout=args.src_layout, ang_res=args.angres)
    save_scene(scene, args.out, args.dst_layout)
    return 0


def cmd_degrade(args) -> int:
    layout = args.layout or infer_layout(args.inp)
    scene = load_scene(args.inp, layout=layout, ang_res=args.angres)
    lr = pipeline.degrade_scene(scene, args.scale)
    save_scene(lr, args.out, layout if args.to is None else args.to)
    return 0


def cmd_train(args) -> int:
    net_cfg = _net_config(args)
    cfg = train_mod.TrainConfig(
        lr0=args.lr0, epochs=args.epochs, batch=args.batch,
        patch=args.patch, scale=net_cfg.scale, seed=args.seed,
    )
    dataset = []
    for src in discover_scenes(args.data):
        scene = load_scene(
            src,
            ang_res=args.angres if src.is_file() else None,
            crop_ang=net_cfg.ang_res,
        )
        dataset.append(scene.y)
    params, trace = train_mod.train(dataset, net_cfg, cfg)
    save_weights(args.out, params, net_cfg)
    out = Path(args.out)
    loss_csv = out.with_suffix(out.suffix + ".loss.csv")
    loss_csv.write_text("\n".join(train_mod.trace_csv_lines(trace)) + "\n")
    figures.save_loss_curve(trace, out.with_suffix(out.suffix + ".loss.png"))
    print(f"trained {len(trace)} iterations; weights -> {out}")
    return 0


def cmd_infer(args) -> int:
    params, cfg = load_weights(args.weights)
    layout = args.layout or infer_layout(args.inp)
    scene = load_scene(args.inp, layout=layout, ang_res=args.angres,
                       crop_ang=cfg.ang_res)
    sr = pipeline.super_resolve_scene(scene, params, cfg)
    out_layout = args.to or ("views-dir" if not str(args.out).endswith(".png")
                             else "sai-grid")
    save_scene(sr, args.out, out_layout)
    return 0


def cmd_eval(args) -> int:
    params, cfg = load_weights(args.weights)
    reports = pipeline.evaluate_dataset(
        args.data, params, cfg, crop_border=args.crop_border,
        ang_res=args.angres,
    )
    agg = aggregate(reports)
    dataset_name = Path(args.data).name
    rows = ["dataset,scene,u,v,psnr,ssim"]
    for r in sorted(reports, key=lambda r: r.scene):
        a = r.psnr_views.shape[0]
        for u in range(a):
            for v in range(a):
                rows.append(
                    f"{dataset_name},{r.scene},{u + 1},{v + 1},"
                    f"{r.psnr_views[u, v]:.4f},{r.ssim_views[u, v]:.6f}"
                )
        rows.append(f"{dataset_name},{r.scene},,,"
                    f"{r.psnr_mean:.4f},{r.ssim_mean:.6f}")
    rows.append(f"{dataset_name},,,,{agg.psnr_mean:.4f},{agg.ssim_mean:.6f}")
    report = Path(args.report)
    report.parent.mkdir(parents=True, exist_ok=True)
    report.write_text("\n".join(rows) + "\n")
    figures.save_view_heatmaps(
        reports, report.with_suffix(report.suffix + ".views.png")
    )
    print(f"PSNR {agg.psnr_mean:.4f} SSIM {agg.ssim_mean:.6f}")
    return 0


def cmd_info(args) -> int:
    if args.weights:
        _, cfg = load_weights(args.weights)
    else:
        cfg = _net_config(args)
    try:
        h, w = (int(s) for s in args.input_hw.split("x"))
    except ValueError as e:
        raise ParameterError(f"bad --input-hw {args.input_hw!r}") from e
    params = count_params(cfg)
    flops = count_flops(cfg, h, w)
    print(f"config N={cfg.n_groups} K={cfg.blocks_per_group} "
          f"C={cfg.channels} A={cfg.ang_res} scale={cfg.scale} "
          f"variant={cfg.variant} ang_upsample={cfg.ang_upsample}")
    print(f"params {params}")
    print(f"flops {flops}")
    print(f"params {params / 1e6:.2f}M, flops {flops / 1e9:.2f}G "
          f"on {cfg.ang_res}x{cfg.ang_res}x{h}x{w} (1 MAC = 1 FLOP)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lfin",
        description="Light-field image super-resolution engine",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("convert", help="convert a scene between layouts")
    pc.add_argument("--in", dest="inp", required=True)
    pc.add_argument("--from", dest="src_layout", required=True, choices=LAYOUTS)
    pc.add_argument("--to", dest="dst_layout", required=True, choices=LAYOUTS)
    pc.add_argument("--out", required=True)
    pc.add_argument("--angres", type=int, default=None)
    pc.set_defaults(fn=cmd_convert)

    pd = sub.add_parser("degrade", help="bicubic per-view downscale")
    pd.add_argument("--in", dest="inp", required=True)
    pd.add_argument("--scale", type=int, required=True, choices=(2, 4))
    pd.add_argument("--out", required=True)
    pd.add_argument("--layout", choices=LAYOUTS, default=None)
    pd.add_argument("--to", choices=LAYOUTS, default=None)
    pd.add_argument("--angres", type=int, default=None)
    pd.set_defaults(fn=cmd_degrade)

    pt = sub.add_parser("train", help="train on a directory of HR scenes")
    pt.add_argument("--data", required=True)
    _add_config_flags(pt)
    pt.add_argument("--seed", type=int, required=True)
    pt.add_argument("--out", required=True)
    pt.add_argument("--epochs", type=int, default=40)
    pt.add_argument("--batch", type=int, default=12)
    pt.add_argument("--patch", type=int, default=64)
    pt.add_argument("--lr0", type=float, default=5e-4)
    pt.set_defaults(fn=cmd_train)

    pi = sub.add_parser("infer", help="super-resolve a scene")
    pi.add_argument("--weights", required=True)
    pi.add_argument("--in", dest="inp", required=True)
    pi.add_argument("--out", required=True)
    pi.add_argument("--layout", choices=LAYOUTS, default=None)
    pi.add_argument("--to", choices=LAYOUTS, default=None)
    pi.add_argument("--angres", type=int, default=None)
    pi.set_defaults(fn=cmd_infer)

    pe = sub.add_parser("eval", help="degrade+super-resolve+score a dataset")
    pe.add_argument("--weights", required=True)
    pe.add_argument("--data", required=True)
    pe.add_argument("--crop-border", dest="crop_border", type=int, default=0)
    pe.add_argument("--report", required=True)
    pe.add_argument("--angres", type=int, default=None)
    pe.set_defaults(fn=cmd_eval)

    pn = sub.add_parser("info", help="parameter and FLOP budget")
    pn.add_argument("--weights", default=None)
    _add_config_flags(pn, require_core=False)
    pn.add_argument("--input-hw", dest="input_hw", default="32x32")
    pn.set_defaults(fn=cmd_info)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except LfinError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
