"""Verification report: one record per executed check, emittable as stable
JSON (byte-identical across reruns with the same model and seed) or as
human-readable text with wall times."""

import json


class Check:
    def __init__(self, id, anchor, residual, tolerance, mode="le", detail=None,
                 samples=None, worst_sample=None, wall_time=0.0):
        self.id = id
        self.anchor = anchor
        self.residual = residual
        self.tolerance = tolerance
        self.mode = mode  # "le": residual <= tol; "ge": residual >= tol; "info"
        self.detail = detail or {}
        self.samples = samples
        self.worst_sample = worst_sample
        self.wall_time = wall_time

    @property
    def passed(self):
        if self.mode == "info":
            return True
        if self.mode == "ge":
            return self.residual >= self.tolerance
        return self.residual <= self.tolerance

    def to_dict(self):
        out = {
            "id": self.id,
            "anchor": self.anchor,
            "residual": _num(self.residual),
            "tolerance": _num(self.tolerance),
            "mode": self.mode,
            "passed": self.passed,
        }
        if self.samples is not None:
            out["samples"] = self.samples
        if self.detail:
            out["detail"] = {k: _num(v) for k, v in sorted(self.detail.items())}
        if not self.passed and self.worst_sample is not None:
            out["worst_sample"] = [_num(v) for v in self.worst_sample]
        return out


def _num(v):
    if isinstance(v, complex):
        if v.imag == 0:
            v = v.real
        else:
            return [round(v.real, 15), round(v.imag, 15)]
    if isinstance(v, float):
        return float(f"{v:.15g}")
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return v


class VerificationReport:
    def __init__(self, model_name, suites, seed):
        self.model_name = model_name
        self.suites = list(suites)
        self.seed = seed
        self.checks = []

    def add(self, check):
        self.checks.append(check)
        return check

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    @property
    def n_failed(self):
        return sum(not c.passed for c in self.checks)

    def to_json(self, include_timing=False):
        doc = {
            "model": self.model_name,
            "suites": self.suites,
            "seed": self.seed,
            "passed": self.all_passed,
            "checks": [c.to_dict() for c in self.checks],
        }
        if include_timing:
            doc["wall_times"] = {c.id: round(c.wall_time, 6) for c in self.checks}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"

    def to_text(self):
        lines = [f"model {self.model_name}  suites {','.join(self.suites)}  "
                 f"seed {self.seed}"]
        width = max((len(c.id) for c in self.checks), default=10)
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            if c.mode == "info":
                status = "info"
            rel = {"le": "<=", "ge": ">="}.get(c.mode, "  ")
            tol = f"{rel} {c.tolerance:.1e}" if c.tolerance is not None else ""
            lines.append(
                f"  [{status}] {c.id:<{width}}  residual {c.residual:.3e} {tol}"
                f"  ({c.anchor}, {c.wall_time:.2f}s)"
            )
            if not c.passed and c.worst_sample is not None:
                lines.append(f"         worst sample: {c.worst_sample}")
        n = len(self.checks)
        lines.append(
            f"{n - self.n_failed}/{n} checks passed"
            + ("" if self.all_passed else f"  ({self.n_failed} FAILED)")
        )
        return "\n".join(lines) + "\n"
