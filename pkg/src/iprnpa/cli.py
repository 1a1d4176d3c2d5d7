"""Command-line interface.

Exit codes: 0 success, 2 infeasible instance or solution, 3 search budget
exceeded, 4 bad input.
"""
from __future__ import annotations

import csv
import io as _io
import json
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

import click

from . import io as fio
from .evaluator import (InfeasibleSolutionError, SolutionStructureError, check_feasibility, eval_total,
                        nurse_loads, occupancy)
from .heuristic import HeuristicInfeasible, run_heuristic
from .instgen import PRESETS, GenConfig, generate_instance, preset
from .mipexport import ExportError, export, export_full_mip, export_pra, write_lp, write_mps
from .model import Instance, validate_instance
from .oracle import BudgetExceeded, DEFAULT_MAX_NODES, enumerate_optimal
from .roster import (RosterInfeasible, RosterRequest, automatic_nurse_count, check_roster, make_skills,
                     parse_per_shift, solve_roster, uniform_requirement)

EXIT_OK, EXIT_INFEASIBLE, EXIT_BUDGET, EXIT_BAD_INPUT = 0, 2, 3, 4
ORACLE_PATIENT_DAYS = 8


class CliExit(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _load_instance(path: str) -> Instance:
    try:
        inst = fio.load_instance(path)
    except (OSError, ValueError) as exc:
        raise CliExit(f"cannot read instance {path}: {exc}", EXIT_BAD_INPUT) from exc
    bad = validate_instance(inst)
    if bad:
        structural = {"bed-capacity", "nurse-on-duty"}
        code = EXIT_INFEASIBLE if all(v.rule in structural for v in bad) else EXIT_BAD_INPUT
        raise CliExit(f"invalid instance: {bad[0].field} ({bad[0].rule}) {bad[0].message}".rstrip(), code)
    return inst


def _load_solution(path: str):
    try:
        return fio.load_solution(path)
    except (OSError, ValueError) as exc:
        raise CliExit(f"cannot read solution {path}: {exc}", EXIT_BAD_INPUT) from exc


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        click.echo(text, nl=False)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _config(preset_name: Optional[str], config: Optional[str]) -> GenConfig:
    if preset_name and config:
        raise CliExit("use either --preset or --config", EXIT_BAD_INPUT)
    try:
        if config:
            return GenConfig.from_dict(json.loads(Path(config).read_text()))
        return preset(preset_name or "30beds-var1")
    except (OSError, ValueError, TypeError) as exc:
        raise CliExit(f"bad configuration: {exc}", EXIT_BAD_INPUT) from exc


@click.group()
def main() -> None:
    """Integrated patient-to-room and nurse-to-patient assignment tools."""


# -- generate -----------------------------------------------------------------------

@main.command()
@click.option("--preset", "preset_name", type=click.Choice(sorted(PRESETS)), default=None)
@click.option("--config", type=click.Path(dir_okay=False), default=None, help="GenConfig as JSON.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--weeks", type=int, default=None, help="Override the horizon in weeks.")
@click.option("--num-instances", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def generate(preset_name, config, seed, weeks, num_instances, out):
    """Generate seeded instances into a directory."""
    cfg = _config(preset_name, config)
    try:
        if weeks is not None:
            cfg = replace(cfg, weeks=weeks)
        if num_instances is not None:
            cfg = replace(cfg, num_instances=num_instances)
    except ValueError as exc:
        raise CliExit(str(exc), EXIT_BAD_INPUT) from exc
    Path(out).mkdir(parents=True, exist_ok=True)
    for k in range(cfg.num_instances):
        try:
            inst = generate_instance(cfg, seed + k)
        except RosterInfeasible as exc:
            raise CliExit(f"roster infeasible: {exc}", EXIT_INFEASIBLE) from exc
        except ValueError as exc:
            raise CliExit(str(exc), EXIT_BAD_INPUT) from exc
        path = Path(out) / f"{inst.name}.json"
        fio.save_instance(inst, path)
        click.echo(f"{path}  patients={len(inst.patients)} nurses={len(inst.nurses)}")


# -- roster -------------------------------------------------------------------------------

def _roster_options(f):
    for opt in reversed([
        click.option("--nurses", type=int, default=None, help="Nurse count; omit to search upward."),
        click.option("--days", type=int, default=7, show_default=True),
        click.option("--max-shifts", type=int, default=5, show_default=True),
        click.option("--per-shift", default="3:1,2:3,1:1", show_default=True,
                     help="Nurses per level on every shift, level:count pairs."),
        click.option("--night", default=None, help="Different level counts on night shifts."),
        click.option("--skill-levels", type=click.Choice(["2", "3"]), default="3", show_default=True),
    ]):
        f = opt(f)
    return f


def _roster_request(nurses, days, max_shifts, per_shift, night, skill_levels):
    from .instgen import SKILL_MIX
    try:
        base = uniform_requirement(days, parse_per_shift(per_shift),
                                   parse_per_shift(night) if night else None)
    except ValueError as exc:
        raise CliExit(str(exc), EXIT_BAD_INPUT) from exc
    mix = SKILL_MIX[int(skill_levels)]
    return base, mix


@main.command("roster")
@_roster_options
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--auto", "auto", is_flag=True, help="Search the smallest nurse count (default without --nurses).")
@click.option("--node-budget", type=int, default=200_000, show_default=True)
@click.option("--out", default=None, help="Roster JSON (default stdout).")
def roster_cmd(nurses, days, max_shifts, per_shift, night, skill_levels, seed, auto, node_budget, out):
    """Build a nurse roster satisfying the coverage and rest rules."""
    if auto and nurses is not None:
        raise CliExit("use either --nurses or --auto", EXIT_BAD_INPUT)
    base, mix = _roster_request(nurses, days, max_shifts, per_shift, night, skill_levels)
    try:
        if nurses is None:
            _, roster, skills = automatic_nurse_count(base, mix, days, max_shifts, seed, node_budget)
        else:
            skills = make_skills(nurses, mix)
            roster = solve_roster(RosterRequest(skills, base, max_shifts, days), seed, node_budget)
    except RosterInfeasible as exc:
        raise CliExit(f"roster infeasible: {exc}", EXIT_INFEASIBLE) from exc
    except ValueError as exc:
        raise CliExit(str(exc), EXIT_BAD_INPUT) from exc
    problems = check_roster(RosterRequest(skills, base, max_shifts, days), roster)
    if problems:  # would be a solver bug
        raise CliExit("roster check failed: " + problems[0], EXIT_INFEASIBLE)
    doc = {"days": days, "max_shifts": max_shifts,
           "nurses": {n: {"skill": skills[n], "shifts": sorted(roster.get(n, ()))} for n in sorted(skills)}}
    _write(out, fio.dumps(doc))


# -- solve / evaluate / report ---------------------------------------------------------------

@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", default=None, help="Solution JSON.")
@click.option("--backend", type=click.Choice(["compiled", "python"]), default=None)
@click.option("--max-triples", type=int, default=None, help="Keep the k best nurse triples per patient and room.")
@click.option("--seed", type=int, default=0, help="Accepted for symmetry; the heuristic is deterministic.")
@click.option("--no-timestamps", is_flag=True, help="Omit wall-clock figures from the output.")
def solve(instance_path, out, backend, max_triples, seed, no_timestamps):
    """Run the greedy heuristic."""
    inst = _load_instance(instance_path)
    try:
        res = run_heuristic(inst, max_triples, backend)
    except HeuristicInfeasible as exc:
        raise CliExit(str(exc), EXIT_INFEASIBLE) from exc
    except RuntimeError as exc:
        raise CliExit(str(exc), EXIT_BAD_INPUT) from exc
    if out:
        fio.save_solution(res.solution, out, instance_ref=Path(instance_path).name)
    click.echo(res.breakdown.table(), nl=False)
    if not no_timestamps:
        click.echo(f"wall_ms  {res.wall_ms:.1f}")


@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(dir_okay=False))
@click.option("--solution", "solution_path", required=True, type=click.Path(dir_okay=False))
@click.option("--json", "as_json", is_flag=True)
def evaluate(instance_path, solution_path, as_json):
    """Score a solution; report hard violations when it is infeasible."""
    inst = _load_instance(instance_path)
    sol = _load_solution(solution_path)
    try:
        b = eval_total(inst, sol)
    except SolutionStructureError as exc:
        raise CliExit(str(exc), EXIT_BAD_INPUT) from exc
    except InfeasibleSolutionError as exc:
        for v in exc.report.violations:
            click.echo(f"{v.family}\tshift {v.shift}\t{' '.join(v.ids)}")
        raise CliExit(str(exc), EXIT_INFEASIBLE) from exc
    click.echo(fio.dumps(b.as_dict()) if as_json else b.table(), nl=False)


def render_report(inst: Instance, sol) -> str:
    out = _io.StringIO()
    occ = occupancy(sol)
    out.write("Room occupancy\n")
    for d in range(1, inst.num_days + 1):
        out.write(f"day {d}\n")
        for r in inst.room_ids:
            ps = sorted(occ.get((r, d), []))
            beds = inst.room_by_id[r].num_beds
            bar = "#" * len(ps) + "." * max(0, beds - len(ps))
            out.write(f"  {r:<6} {bar:<5} [{', '.join(ps)}]\n")
    out.write("\nNurse load per shift (load / maxload)\n")
    loads = nurse_loads(inst, sol)
    for n in inst.nurse_ids:
        nurse = inst.nurse_by_id[n]
        for s in sorted(nurse.shifts):
            ld = loads.get((n, s), 0.0)
            ml = nurse.maxload[s]
            flag = f"  OVER +{ld - ml:.3f}" if ld > ml + 1e-12 else ""
            out.write(f"  {n:<6} shift {s:>3} ({inst.calendar.shift_type(s):<5}) {ld:8.3f} / {ml:6.2f}{flag}\n")
    out.write("\nObjectives\n")
    out.write(eval_total(inst, sol).table())
    return out.getvalue()


@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(dir_okay=False))
@click.option("--solution", "solution_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", default=None)
def report(instance_path, solution_path, out):
    """Human-readable plan: occupancy, nurse loads and objective totals."""
    inst = _load_instance(instance_path)
    sol = _load_solution(solution_path)
    try:
        rep = check_feasibility(inst, sol)
    except SolutionStructureError as exc:
        raise CliExit(str(exc), EXIT_BAD_INPUT) from exc
    if rep.violations:
        lines = ["Infeasible solution"] + [f"  {v.family}\tshift {v.shift}\t{' '.join(v.ids)}"
                                           for v in rep.violations]
        _write(out, "\n".join(lines) + "\n")
        sys.exit(EXIT_INFEASIBLE)
    _write(out, render_report(inst, sol))


# -- export / oracle ----------------------------------------------------------------------

@main.command("export")
@click.option("--model", "kind", type=click.Choice(["full", "pra", "npa", "roster"]), required=True)
@click.option("--instance", "instance_path", type=click.Path(dir_okay=False), default=None)
@click.option("--rooms", "rooms_path", type=click.Path(dir_okay=False), default=None,
              help="Solution whose rooms are fixed in the nurse model.")
@click.option("--format", "fmt", type=click.Choice(["lp", "mps"]), default="lp", show_default=True)
@click.option("--no-age-order", is_flag=True, help="Omit the age-order rows of the room part.")
@_roster_options
@click.option("--out", default=None)
def export_cmd(kind, instance_path, rooms_path, fmt, no_age_order, nurses, days, max_shifts, per_shift, night,
               skill_levels, out):
    """Write a linear model file."""
    inst = rooms = req = None
    if kind == "roster":
        if nurses is None:
            raise CliExit("--nurses is required for the roster model", EXIT_BAD_INPUT)
        base, mix = _roster_request(nurses, days, max_shifts, per_shift, night, skill_levels)
        req = RosterRequest(make_skills(nurses, mix), base, max_shifts, days)
    else:
        if instance_path is None:
            raise CliExit("--instance is required", EXIT_BAD_INPUT)
        inst = _load_instance(instance_path)
        if kind == "npa":
            if rooms_path is None:
                raise CliExit("--rooms is required for the nurse model", EXIT_BAD_INPUT)
            rooms = _load_solution(rooms_path)
    try:
        if kind == "full":
            model = export_full_mip(inst, age_order=not no_age_order)
        elif kind == "pra":
            model = export_pra(inst, age_order=not no_age_order)
        else:
            model = export(inst, kind, rooms, req)
    except SolutionStructureError as exc:
        raise CliExit(str(exc), EXIT_BAD_INPUT) from exc
    except ExportError as exc:
        code = EXIT_INFEASIBLE if "infeasible" in str(exc) else EXIT_BAD_INPUT
        raise CliExit(str(exc), code) from exc
    _write(out, write_lp(model) if fmt == "lp" else write_mps(model))


@main.command()
@click.option("--instance", "instance_path", required=True, type=click.Path(dir_okay=False))
@click.option("--max-nodes", type=int, default=DEFAULT_MAX_NODES, show_default=True)
@click.option("--out", default=None, help="Optimal solution JSON.")
def oracle(instance_path, max_nodes, out):
    """Exact optimum of a tiny instance by exhaustive search."""
    inst = _load_instance(instance_path)
    try:
        sol, b = enumerate_optimal(inst, max_nodes=max_nodes)
    except BudgetExceeded as exc:
        raise CliExit(str(exc), EXIT_BUDGET) from exc
    except ValueError as exc:
        raise CliExit(str(exc), EXIT_INFEASIBLE) from exc
    if out:
        fio.save_solution(sol, out, instance_ref=Path(instance_path).name)
    click.echo(b.table(), nl=False)


# -- bench ------------------------------------------------------------------------------------

def _parse_seeds(text: str) -> list[int]:
    out: list[int] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _bench_one(job):
    name, weeks, seed, reps, backend = job
    inst = generate_instance(preset(name, weeks=weeks), seed)
    walls = []
    res = None
    for _ in range(reps):
        res = run_heuristic(inst, backend=backend)
        walls.append(res.wall_ms)
    row = {"preset": name, "weeks": weeks, "seed": seed, "patients": len(inst.patients),
           "nurses": len(inst.nurses), "wall_ms": statistics.median(walls), **res.breakdown.as_dict()}
    patient_days = sum(len(p.stay_days(inst.num_days)) for p in inst.patients)
    row["gap"] = None
    if patient_days <= ORACLE_PATIENT_DAYS:
        try:
            _, ob = enumerate_optimal(inst, incumbent=res.breakdown.weighted_total)
            opt = ob.weighted_total
            row["gap"] = (res.breakdown.weighted_total - opt) / opt if opt > 0 else 0.0
        except BudgetExceeded:
            pass
    return row


def _summaries(rows: list[dict]) -> list[dict]:
    keys = ["wall_ms", "weighted_total", "transfers", "inconvenience", "gender_mix", "equipment_viol",
            "continuity", "skill_viol", "load_viol", "fairness_shift", "fairness_overall",
            "nurses_per_room", "walking"]
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r["preset"], r["weeks"]), []).append(r)
    out = []
    for (name, weeks), rs in sorted(groups.items()):
        s = {"preset": name, "weeks": weeks, "runs": len(rs)}
        for k in keys:
            vals = [float(r[k]) for r in rs]
            s[f"{k}_mean"] = statistics.fmean(vals)
            s[f"{k}_stdev"] = statistics.stdev(vals) if len(vals) > 1 else 0.0
        out.append(s)
    by = {(s["preset"], s["weeks"]): s for s in out}
    for s in out:
        base = by.get((s["preset"], 2))
        if s["weeks"] != 2 and base and base["wall_ms_mean"] > 0:
            s["runtime_ratio_vs_2w"] = s["wall_ms_mean"] / base["wall_ms_mean"]
    return out


@main.command()
@click.option("--presets", default="30beds-var1,30beds-var2,30beds-var3", show_default=True)
@click.option("--weeks", default="2,4", show_default=True)
@click.option("--seeds", default="0-9", show_default=True, help="Comma list or ranges like 0-9.")
@click.option("--repetitions", type=int, default=1, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--backend", type=click.Choice(["compiled", "python"]), default=None)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--no-timestamps", is_flag=True, help="Drop wall-clock fields so outputs are reproducible.")
def bench(presets, weeks, seeds, repetitions, workers, backend, out, no_timestamps):
    """Heuristic benchmark over a preset grid; writes bench.csv and bench.json."""
    try:
        names = [p for p in (x.strip() for x in presets.split(",")) if p]
        for n in names:
            preset(n)
        horizons = [int(w) for w in weeks.split(",") if w.strip()]
        seed_list = _parse_seeds(seeds)
    except ValueError as exc:
        raise CliExit(str(exc), EXIT_BAD_INPUT) from exc
    jobs = [(n, w, s, max(1, repetitions), backend) for n in names for w in horizons for s in seed_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_one, jobs))
    else:
        rows = [_bench_one(j) for j in jobs]
    rows.sort(key=lambda r: (r["preset"], r["weeks"], r["seed"]))
    summary = _summaries(rows)
    if no_timestamps:
        for r in rows:
            r.pop("wall_ms")
        for s in summary:
            for k in [k for k in s if k.startswith("wall_ms") or k.startswith("runtime_ratio")]:
                s.pop(k)
    Path(out).mkdir(parents=True, exist_ok=True)
    doc = {"runs": rows, "summary": summary}
    if not no_timestamps:
        doc["created"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    (Path(out) / "bench.json").write_text(fio.dumps(doc))
    buf = _io.StringIO()
    fields = list(rows[0]) if rows else ["preset", "weeks", "seed"]
    wr = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    wr.writeheader()
    for r in rows:
        wr.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    (Path(out) / "bench.csv").write_text(buf.getvalue())
    for s in summary:
        line = f"{s['preset']:<12} {s['weeks']}w  runs={s['runs']}  total={s['weighted_total_mean']:.2f}"
        if "wall_ms_mean" in s:
            line += f"  wall_ms={s['wall_ms_mean']:.1f}"
        if "runtime_ratio_vs_2w" in s:
            line += f"  ratio_vs_2w={s['runtime_ratio_vs_2w']:.2f}"
        click.echo(line)


if __name__ == "__main__":
    main()
