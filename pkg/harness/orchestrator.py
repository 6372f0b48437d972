"""
Sweep Orchestrator
Runs every allocator over the attention x penalty grid, evaluates and reports
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json
from datetime import datetime

import numpy as np
import pandas as pd
import psutil

from allocators.registry import run_allocator
from harness.evaluation import REPORT_COLUMNS, evaluate, rows_frame
from harness.instances import generate_instance, load_instance
from infrastructure.event_log import EventLog
from infrastructure.setup import provision_output_dir
from infrastructure.workers import WorkerPool
from model.campaign import load_attention, validate_allocation, write_allocation
from sampling.bounds import SampleParams
from sampling.rng import STREAM_CELL, stream_key

SWEEP_COLUMNS = ['cell', 'kappa', 'lambda'] + REPORT_COLUMNS


def cell_seed(master_seed, index):
    return int(stream_key(STREAM_CELL, master_seed, index)[0] % (1 << 31))


def cell_name(allocator, kappa, lam):
    return f"{allocator}_k{kappa}_l{lam:g}"


def summarize(report, allocations, meta):
    """
    Per-cell totals from the sweep report.

    report: DataFrame with SWEEP_COLUMNS; allocations: cell -> Allocation;
    meta: cell -> dict with allocator, kappa, lambda, wall_ms, peak_rss_mb.
    """
    cells = []
    for name, info in meta.items():
        rows = report[report['cell'] == name]
        lam = float(info['lambda'])
        per_ad = (rows['budget_regret'] + lam * rows['seeds']).to_numpy()
        total_budget = float(rows['budget'].sum())
        total = float(per_ad.sum())
        cells.append({
            'cell': name,
            'allocator': info['allocator'],
            'kappa': info['kappa'],
            'lambda': lam,
            'total_regret': total,
            'budget_regret': float(rows['budget_regret'].sum()),
            'seed_regret': float(lam * rows['seeds'].sum()),
            'total_budget': total_budget,
            'regret_pct': 100.0 * total / total_budget if total_budget else 0.0,
            'revenue': float(rows['revenue'].sum()),
            'seeds': int(rows['seeds'].sum()),
            'distinct_nodes': len(allocations[name].distinct_nodes()),
            'regret_min': float(per_ad.min()) if len(per_ad) else 0.0,
            'regret_median': float(np.median(per_ad)) if len(per_ad) else 0.0,
            'regret_max': float(per_ad.max()) if len(per_ad) else 0.0,
            'overshoot_ads': int((rows['revenue'] > rows['budget']).sum()),
            'wall_ms': float(info['wall_ms']),
            'peak_rss_mb': float(info['peak_rss_mb']),
        })
    return {'cells': cells}


def render_summary(summary):
    frame = pd.DataFrame(summary['cells'])
    lines = ["="*60, "SWEEP SUMMARY", "="*60]
    if frame.empty:
        lines.append("(no cells)")
    else:
        columns = ['cell', 'total_regret', 'regret_pct', 'seeds', 'distinct_nodes',
                   'overshoot_ads', 'regret_median', 'wall_ms', 'peak_rss_mb']
        lines.append(frame[columns].to_string(index=False, float_format=lambda x: f"{x:.4f}"))
    return '\n'.join(lines) + '\n'


class SweepOrchestrator:
    def __init__(self, config, events=None):
        print("="*60)
        print("AD ALLOCATION SWEEP ORCHESTRATOR")
        print("="*60)

        self.config = config
        self.output_dir = provision_output_dir(config.output_dir)
        self.events = events or EventLog.for_output(self.output_dir)
        self.params = SampleParams(config.epsilon, config.ell)
        self.process = psutil.Process()
        self.pool = WorkerPool(config.workers)

        self.base = self._build_instance()
        if config.attention:
            self.attention = [('file', load_attention(config.attention, self.base.n))]
        else:
            self.attention = [(int(k), int(k)) for k in config.kappas]

        print(f"\n✓ Instance ready: {self.base.n} users, {self.base.graph.arc_count} arcs, "
              f"{self.base.h} ads")
        print(f"✓ Workers: {config.workers}")
        print("="*60)

    def _build_instance(self):
        config = self.config
        if config.generator:
            return generate_instance(config.generator, config.seed, config.ctp_mode)
        return load_instance(config.graph, config.campaign)

    def cells(self):
        """(index, name, allocator, kappa label, kappa, lambda) in a fixed order"""
        index = 0
        for allocator in self.config.allocators:
            for label, kappa in self.attention:
                for lam in self.config.lambdas:
                    yield index, cell_name(allocator, label, lam), allocator, label, kappa, float(lam)
                    index += 1

    def run_cell(self, index, name, allocator, label, kappa, lam):
        config = self.config
        instance = self.base.with_attention(kappa).with_penalty(lam)
        seed = cell_seed(config.seed, index)

        print(f"\n{'#'*60}")
        print(f"CELL #{index}: {name}")
        print(f"{'#'*60}")
        self.events.emit('CELL_START', cell=name, allocator=allocator, kappa=label,
                         lam=lam, seed=seed)

        rss_before = self.process.memory_info().rss
        result = run_allocator(allocator, instance, seed=seed, params=self.params,
                               mc_runs=config.mc_runs_greedy, pilot_size=config.pilot_size,
                               max_theta=config.max_theta, workers=config.workers,
                               events=self.events, log_steps=config.log_steps, pool=self.pool)
        peak_mb = max(rss_before, self.process.memory_info().rss) / (1024 * 1024)

        violations = validate_allocation(instance, result.allocation)
        if violations:
            raise RuntimeError(f"{name}: allocation violates attention bounds: {violations[:5]}")
        write_allocation(instance, result.allocation,
                         os.path.join(self.output_dir, 'allocations', f"{name}.txt"))

        rows = evaluate(instance, result.allocation, config.eval_runs, config.seed,
                        config.workers, allocator, result.theta, result.wall_ms, self.pool)
        regret = sum(r.budget_regret + lam * r.seeds for r in rows)
        print(f"  ✓ {result.allocation.total_seeds()} seeds in {result.wall_ms:.1f} ms, "
              f"MC regret {regret:.4f}")
        self.events.emit('CELL_COMPLETE', cell=name, seeds=result.allocation.total_seeds(),
                         regret=regret, wall_ms=result.wall_ms, peak_rss_mb=peak_mb,
                         termination=result.termination)

        meta = {'allocator': allocator, 'kappa': label, 'lambda': lam,
                'wall_ms': result.wall_ms, 'peak_rss_mb': peak_mb}
        return rows, result.allocation, meta

    def run(self):
        """Run every cell sequentially and write report.csv, summary.json and summary.txt"""
        started = datetime.now()
        self.events.emit('SWEEP_START', config=self.config.to_dict())

        frames, allocations, meta = [], {}, {}
        with self.pool:
            for index, name, allocator, label, kappa, lam in self.cells():
                rows, alloc, info = self.run_cell(index, name, allocator, label, kappa, lam)
                frames.append(rows_frame(rows, {'cell': name, 'kappa': label, 'lambda': lam}))
                allocations[name] = alloc
                meta[name] = info

        report = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=SWEEP_COLUMNS)
        report = report[SWEEP_COLUMNS]
        report.to_csv(os.path.join(self.output_dir, 'report.csv'), index=False)

        summary = summarize(report, allocations, meta)
        summary['meta'] = {'seed': self.config.seed, 'started': started.isoformat(),
                           'finished': datetime.now().isoformat(),
                           'eval_runs': self.config.eval_runs}
        with open(os.path.join(self.output_dir, 'summary.json'), 'w') as handle:
            json.dump(summary, handle, indent=2)
        text = render_summary(summary)
        with open(os.path.join(self.output_dir, 'summary.txt'), 'w') as handle:
            handle.write(text)

        self.events.emit('SWEEP_COMPLETE', cells=len(meta),
                         duration_s=(datetime.now() - started).total_seconds())
        print("\n" + text)
        return summary


def run_sweep(config, events=None):
    return SweepOrchestrator(config, events).run()


if __name__ == '__main__':
    from infrastructure.config import load_config

    if len(sys.argv) < 2:
        print("usage: python harness/orchestrator.py <config.json>")
        sys.exit(2)
    run_sweep(load_config(sys.argv[1]))
