"""
Command-line interface
gen, import-edges, allocate, evaluate, sweep, oracle and check-bounds subcommands
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import argparse

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; keep that for unknown flags"""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"✗ {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _instance_args(parser):
    parser.add_argument('--graph', help='graph file (nodes=/topics= header)')
    parser.add_argument('--campaign', help='campaign JSON file')
    parser.add_argument('--attention', help='attention bounds file')
    parser.add_argument('--kappa', type=int, default=1, help='uniform attention bound')
    parser.add_argument('--lambda', dest='lam', type=float, default=0.0, help='per-seed penalty')
    parser.add_argument('--fixture', choices=['toy'],
                        help='use the built-in six-user toy instance instead of files')


def _load(args):
    from generators.fixtures import toy_instance
    from harness.instances import load_instance

    if args.fixture:
        instance, alloc_a, alloc_b = toy_instance(args.lam)
        return instance, {'A': alloc_a, 'B': alloc_b}
    if not args.graph or not args.campaign:
        raise ValueError("--graph and --campaign are required (or --fixture)")
    for path in (args.graph, args.campaign, args.attention):
        if path and not os.path.exists(path):
            raise ValueError(f"file not found: {path}")
    return load_instance(args.graph, args.campaign, args.attention, args.kappa, args.lam), {}


def _allocation(args, instance, fixtures):
    from model.campaign import read_allocation

    if args.allocation in fixtures:
        return fixtures[args.allocation]
    if not os.path.exists(args.allocation):
        raise ValueError(f"file not found: {args.allocation}")
    return read_allocation(instance, args.allocation)


def cmd_gen(args):
    from generators.campaigns import gen_campaign, uniform_attention
    from generators.synthetic_graphs import LITERAL_EXPONENTIAL_MEAN, gen_topical, gen_weighted_cascade
    from model.campaign import write_attention, write_campaign
    from model.topic_graph import write_graph

    if args.type == 'weighted_cascade':
        graph = gen_weighted_cascade(args.n, args.m, args.topics, args.seed)
    else:
        mean = LITERAL_EXPONENTIAL_MEAN if args.literal_mean else args.mean
        graph = gen_topical(args.n, args.m, args.topics, mean, args.seed)
    ads = gen_campaign(args.ads, args.topics, args.seed,
                       budgets=(args.budget_lo, args.budget_hi),
                       cpes=(args.cpe_lo, args.cpe_hi),
                       ctp_range=(args.ctp_lo, args.ctp_hi))

    os.makedirs(args.out_dir, exist_ok=True)
    write_graph(graph, os.path.join(args.out_dir, 'graph.txt'))
    write_campaign(ads, os.path.join(args.out_dir, 'campaign.json'))
    write_attention(uniform_attention(args.n, args.kappa), os.path.join(args.out_dir, 'attention.txt'))
    print(f"✓ Generated {graph} with {len(ads)} ads in {args.out_dir}")
    return EXIT_OK


def cmd_import_edges(args):
    from model.topic_graph import load_edge_list, write_graph

    if args.probability is None and not args.weighted_cascade:
        raise ValueError("--probability or --weighted-cascade is required")
    if not os.path.exists(args.edges):
        raise ValueError(f"file not found: {args.edges}")
    graph = load_edge_list(args.edges, args.topics, args.probability, args.undirected,
                           args.weighted_cascade)
    write_graph(graph, args.out)
    print(f"✓ Imported {graph} → {args.out} (ids in {args.edges}.ids)")
    return EXIT_OK


def cmd_allocate(args):
    from allocators.registry import run_allocator
    from infrastructure.config import resolve_workers
    from model.campaign import validate_allocation, write_allocation
    from sampling.bounds import SampleParams
    from sampling.rr_sets import dump_collection

    instance, _ = _load(args)
    result = run_allocator(args.algo, instance, seed=args.seed,
                           params=SampleParams(args.epsilon, args.ell),
                           mc_runs=args.mc_runs, pilot_size=args.pilot_size,
                           max_theta=args.max_theta, workers=resolve_workers(args.workers),
                           verbose=args.verbose)
    violations = validate_allocation(instance, result.allocation)
    if violations:
        raise RuntimeError(f"allocation violates attention bounds: {violations[:5]}")
    write_allocation(instance, result.allocation, args.out)

    if args.dump_collections and getattr(result, 'collections', None):
        os.makedirs(args.dump_collections, exist_ok=True)
        for ad, coll in zip(instance.ads, result.collections):
            dump_collection(coll, os.path.join(args.dump_collections, f"ad{ad.id}.rrc"))

    print(f"✓ {args.algo}: {result.allocation.total_seeds()} seeds in {result.wall_ms:.1f} ms "
          f"({result.termination}) → {args.out}")
    return EXIT_OK


def cmd_evaluate(args):
    from harness.evaluation import rows_frame, total_regret, evaluate, write_report
    from infrastructure.config import resolve_workers

    instance, fixtures = _load(args)
    alloc = _allocation(args, instance, fixtures)
    rows = evaluate(instance, alloc, args.runs, args.seed, resolve_workers(args.workers),
                    allocator=args.label)
    if args.report:
        write_report(rows, args.report)
    print(rows_frame(rows).to_string(index=False))
    print(f"\nTotal revenue: {sum(r.revenue for r in rows):.4f}")
    print(f"Total regret:  {total_regret(rows, instance.lam):.4f}")
    return EXIT_OK


def cmd_sweep(args):
    from harness.orchestrator import run_sweep
    from infrastructure.config import load_config

    config = load_config(args.config)
    if args.output_dir:
        config.output_dir = args.output_dir
    run_sweep(config)
    return EXIT_OK


def cmd_oracle(args):
    from oracle.regret import regret_total, revenue
    from oracle.spread import exact_spread

    instance, fixtures = _load(args)
    alloc = _allocation(args, instance, fixtures)
    spreads = [exact_spread(instance.view(i), instance.ctps(i), alloc.seed_sets[i])
               for i in range(instance.h)]
    for ad, estimate in zip(instance.ads, spreads):
        print(f"ad {ad.id}: expected clicks {estimate.mean:.6f}")
    print(f"total expected clicks: {sum(s.mean for s in spreads):.6f}")
    report = regret_total(instance, alloc,
                          [revenue(s, instance.cpes[i]) for i, s in enumerate(spreads)])
    print(f"total regret: {report.total:.6f}")
    return EXIT_OK


def cmd_check_bounds(args):
    from allocators.bounds_checker import check_bounds
    from allocators.registry import run_allocator

    instance, _ = _load(args)
    result = run_allocator(args.algo, instance, seed=args.seed)
    report = check_bounds(instance, result, args.budget)
    print("="*60)
    print("REGRET BOUND CHECK")
    print("="*60)
    print(f"p_i:       {', '.join(f'{p:.4f}' for p in report.p)}")
    print(f"p_max:     {report.p_max:.4f}")
    print(f"s_opt:     {list(report.s_opt)}")
    print(f"optimum:   {report.optimal_regret:.6f}")
    print(f"{args.algo}: {report.allocator_regret:.6f}")
    for check in report.checks:
        mark = {'pass': '✓', 'fail': '✗'}.get(check.status, '⚠️ ')
        print(f"{mark} {check.name}: {check.status} (bound {check.bound:.6f})")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog='adalloc', description='Regret-minimizing social ad allocation')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)

    gen = sub.add_parser('gen', help='generate a synthetic graph, campaign and attention file')
    gen.add_argument('--type', choices=['weighted_cascade', 'topical'], default='weighted_cascade')
    gen.add_argument('--n', type=int, required=True)
    gen.add_argument('--m', type=int, required=True)
    gen.add_argument('--topics', type=int, default=1)
    gen.add_argument('--ads', type=int, default=5)
    gen.add_argument('--mean', type=float, default=1.0 / 30.0)
    gen.add_argument('--literal-mean', action='store_true', help='use exponential mean 30')
    gen.add_argument('--kappa', type=int, default=1)
    gen.add_argument('--budget-lo', type=float, default=200.0)
    gen.add_argument('--budget-hi', type=float, default=600.0)
    gen.add_argument('--cpe-lo', type=float, default=5.0)
    gen.add_argument('--cpe-hi', type=float, default=6.0)
    gen.add_argument('--ctp-lo', type=float, default=0.01)
    gen.add_argument('--ctp-hi', type=float, default=0.03)
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--out-dir', required=True)
    gen.set_defaults(handler=cmd_gen)

    imports = sub.add_parser('import-edges', help='convert a plain src/dst edge list to a graph file')
    imports.add_argument('--edges', required=True, help='edge list with arbitrary string ids')
    imports.add_argument('--topics', type=int, default=1)
    imports.add_argument('--probability', type=float, help='constant probability on every arc')
    imports.add_argument('--weighted-cascade', action='store_true', help='use 1/indegree(v)')
    imports.add_argument('--undirected', action='store_true', help='add both directions')
    imports.add_argument('--out', required=True, help='graph file to write')
    imports.set_defaults(handler=cmd_import_edges)

    allocate = sub.add_parser('allocate', help='run one allocator and write its allocation')
    _instance_args(allocate)
    allocate.add_argument('--algo', default='tirm',
                          choices=['myopic', 'myopic_plus', 'random', 'greedy_exact', 'greedy_mc', 'tirm'])
    allocate.add_argument('--epsilon', type=float, default=0.1)
    allocate.add_argument('--ell', type=float, default=1.0)
    allocate.add_argument('--seed', type=int, default=0)
    allocate.add_argument('--pilot-size', type=int, default=2000)
    allocate.add_argument('--max-theta', type=int)
    allocate.add_argument('--mc-runs', type=int, default=1000)
    allocate.add_argument('--workers', type=int)
    allocate.add_argument('--dump-collections', help='directory for TIRM RR-collection dumps')
    allocate.add_argument('--verbose', action='store_true')
    allocate.add_argument('--out', required=True, help='allocation file to write')
    allocate.set_defaults(handler=cmd_allocate)

    evaluate = sub.add_parser('evaluate', help='Monte-Carlo evaluation of an allocation')
    _instance_args(evaluate)
    evaluate.add_argument('--allocation', required=True, help='allocation file (or A/B with --fixture)')
    evaluate.add_argument('--runs', type=int, default=10000)
    evaluate.add_argument('--seed', type=int, default=0)
    evaluate.add_argument('--workers', type=int)
    evaluate.add_argument('--label', default='file', help='allocator column value')
    evaluate.add_argument('--report', help='CSV report to write')
    evaluate.set_defaults(handler=cmd_evaluate)

    sweep = sub.add_parser('sweep', help='run an allocator x kappa x lambda sweep from a config')
    sweep.add_argument('--config', required=True)
    sweep.add_argument('--output-dir')
    sweep.set_defaults(handler=cmd_sweep)

    oracle = sub.add_parser('oracle', help='exact expected clicks of an allocation')
    _instance_args(oracle)
    oracle.add_argument('--allocation', required=True, help='allocation file (or A/B with --fixture)')
    oracle.set_defaults(handler=cmd_oracle)

    bounds = sub.add_parser('check-bounds', help='check regret guarantees by brute force')
    _instance_args(bounds)
    bounds.add_argument('--algo', default='greedy_exact')
    bounds.add_argument('--seed', type=int, default=0)
    bounds.add_argument('--budget', type=int, default=1 << 14, help='max subset evaluations')
    bounds.set_defaults(handler=cmd_check_bounds)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, 'handler', None):
        parser.print_help()
        return EXIT_CONFIG
    try:
        return args.handler(args)
    except (ValueError, FileNotFoundError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        print(f"✗ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
