"""CLI command for scoring an estimated graph or ordering against a true graph."""
import argparse
import json

from ..exceptions import DiffanError, ValidationError
from ..models.dag import Dag, Ordering
from ..services.metrics import evaluate, order_divergence
from ..utils.manifest import write_json
from .display_utils import console, metrics_table, print_error, print_written


def add_subparser(subparsers):
    """Add the metrics command parser to the main parser."""
    parser = subparsers.add_parser(
        "metrics",
        help="Compare an estimated graph and/or ordering with a true graph",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # SHD, SID and order divergence of a discover run
  diffan metrics --truth truth.csv --graph out/graph.csv --ordering out/ordering.json

  # Order divergence only, saved to JSON
  diffan metrics --truth truth.csv --ordering ordering.json --out metrics.json
        """
    )
    parser.add_argument("--truth", required=True, help="True adjacency CSV")
    parser.add_argument("--graph", help="Estimated adjacency CSV")
    parser.add_argument("--ordering", help="JSON list of labels, root first")
    parser.add_argument("--out", help="Write the report to this JSON file")
    return parser


def read_ordering(path, labels) -> Ordering:
    try:
        with open(path, 'r') as f:
            names = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read ordering {path}: {e}") from e
    if not isinstance(names, list):
        raise ValidationError(f"{path} must contain a JSON list of labels")
    return Ordering.from_labels(names, labels)


def handle_command(args):
    """Handle the metrics command."""
    try:
        if not args.graph and not args.ordering:
            raise ValidationError("give --graph, --ordering or both")
        truth = Dag.from_csv(args.truth)
        order = read_ordering(args.ordering, truth.labels) if args.ordering else None
        if args.graph:
            report = evaluate(Dag.from_csv(args.graph), truth, order)
        else:
            report = {'d_top': order_divergence(order, truth)}

        console.print(metrics_table(report))
        if args.out:
            print_written([write_json(args.out, report)])
        return 0
    except DiffanError as e:
        print_error(e)
        return e.exit_code
