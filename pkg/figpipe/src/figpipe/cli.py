"""figpipe CLI: render one figure from a JSON spec."""

import argparse
import sys

from .render import FigureSpec, SchemaError, render


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="figpipe", description="Render experiment-CSV figure panels.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render a figure from a spec")
    p_render.add_argument("--spec", required=True, help="FigureSpec JSON path")
    p_render.add_argument("--out", default=None,
                          help="override the spec's output image path")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec.from_json(args.spec)
        if args.out is not None:
            spec.out = args.out
        image, manifest = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {image}")
    print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
