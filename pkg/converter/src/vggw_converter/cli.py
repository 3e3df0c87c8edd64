"""vggw-convert: one-shot checkpoint to VGGW conversion."""

from __future__ import annotations

import argparse
import sys

from .convert import LAYOUTS, ConversionError, convert, load_checkpoint


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vggw-convert", description=__doc__)
    parser.add_argument("source", help="checkpoint file (.npz, .pt, .pth)")
    parser.add_argument("output", help="VGGW output path")
    parser.add_argument(
        "--layout",
        choices=LAYOUTS,
        default="out-in-h-w",
        help="kernel element order in the source (PyTorch: out-in-h-w, TensorFlow: h-w-in-out)",
    )
    args = parser.parse_args(argv)
    try:
        arrays = load_checkpoint(args.source)
        report = convert(arrays, args.output, layout=args.layout)
    except ConversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for layer in report.layers:
        print(f"{layer.name}\t{layer.kernel_shape}\t{layer.sha256[:16]}\t{layer.byte_count}")
    print(f"total bytes\t{report.total_bytes}")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
