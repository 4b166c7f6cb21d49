"""Declarative model files: schema validation and runtime assembly.

A model file is a JSON document carrying the structure constants, the
isotropy split, the invariant form, a faithful matrix representation, the
group chart, optional closed-form frame fields and gamma matrices, the
Casimir polynomials, the orbit section, the polarization, the
lambda-representation, symmetry-operator polynomials, and the solution
constructions.  Numbers may be given as JSON numbers or [re, im] pairs, and
almost every scalar slot accepts an expression string over the declared
parameters.  Matrices are nested lists in row-major order.
"""

import json
import math

import numpy as np

from . import clifford, geometry
from .exprs import CompiledExpr, ExprError, SymbolTable
from .groupchart import ChartSpec, GroupEngine, MatrixRep
from .lambdarep import LambdaRep
from .liecore import (
    BilinearForm,
    DualPolynomial,
    LieAlgebra,
    PolarizationSpec,
    SubalgebraSplit,
)


class ModelError(ValueError):
    """Schema violation, with the JSON path of the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _need(section, key, path, types=None):
    if key not in section:
        raise ModelError(path, f"missing required key {key!r}")
    val = section[key]
    if types is not None and not isinstance(val, types):
        raise ModelError(f"{path}.{key}", f"expected {types}, got {type(val).__name__}")
    return val


def _as_complex(value, path):
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) for v in value)):
        return complex(value[0], value[1])
    raise ModelError(path, "numbers must be scalars or [re, im] pairs")


def _param_expr(text, params, path):
    from .jets import Jet

    try:
        st = SymbolTable(variables=[], parameters=list(params))
        out = CompiledExpr(str(text), st).eval_env(dict(params))
        return complex(out.value) if isinstance(out, Jet) else complex(out)
    except ExprError as exc:
        raise ModelError(path, f"bad expression {text!r}: {exc}") from None


def _matrix_of_params(rows, params, path, square=None):
    try:
        out = np.array([[_param_expr(e, params, path) if isinstance(e, str)
                         else _as_complex(e, path) for e in row] for row in rows])
    except TypeError:
        raise ModelError(path, "expected a nested list matrix") from None
    if out.ndim != 2 or (square and out.shape[0] != out.shape[1]):
        raise ModelError(path, "matrix has the wrong shape")
    return out


class Model:
    """A fully assembled model; all fields are ready-to-use runtime objects."""

    def __init__(self, doc, path="<memory>"):
        self.path = path
        self.doc = doc
        self.name = _need(doc, "name", "$", str)
        self.description = doc.get("description", "")
        self._build_parameters()
        self._build_algebra()
        self._build_split()
        self._build_form()
        self._build_rep_and_chart()
        self._build_fields()
        self._build_gammas()
        self._build_casimirs()
        self._build_orbit()
        self._build_polarization()
        self._build_lambda_rep()
        self._build_symmetry_polynomials()
        self.solutions = doc.get("solutions")
        self.verification = dict(doc.get("verification", {}))

    # -- sections ----------------------------------------------------------

    def _build_parameters(self):
        raw = self.doc.get("parameters", {})
        params = {}
        for name, value in raw.items():
            params[name] = _as_complex(value, f"$.parameters.{name}")
        for name, expr in self.doc.get("derived_parameters", {}).items():
            params[name] = _param_expr(expr, params, f"$.derived_parameters.{name}")
        self.params = params

    def with_params(self, **updates):
        """Rebuild the model with parameter overrides.

        Overriding a derived parameter unpins it from its defining expression.
        """
        doc = json.loads(json.dumps(self.doc))
        for name, value in updates.items():
            v = complex(value)
            doc.setdefault("parameters", {})[name] = (
                v.real if v.imag == 0 else [v.real, v.imag]
            )
            doc.get("derived_parameters", {}).pop(name, None)
        return Model(doc, self.path)

    def _build_algebra(self):
        sec = _need(self.doc, "algebra", "$", dict)
        dim = _need(sec, "dim", "$.algebra", int)
        labels = sec.get("basis", [f"e{k + 1}" for k in range(dim)])
        if len(labels) != dim or len(set(labels)) != dim:
            raise ModelError("$.algebra.basis", "needs dim distinct labels")
        self.labels = list(labels)
        self.label_index = {lab: k for k, lab in enumerate(labels)}
        C = np.zeros((dim, dim, dim))
        for n, entry in enumerate(_need(sec, "brackets", "$.algebra", list)):
            path = f"$.algebra.brackets[{n}]"
            if not (isinstance(entry, list) and len(entry) == 3):
                raise ModelError(path, "expected [left, right, components]")
            a = self._index_of(entry[0], path)
            b = self._index_of(entry[1], path)
            if a == b:
                raise ModelError(path, "bracket of an element with itself")
            for target, coeff in entry[2].items():
                c = self._index_of(target, path)
                v = _param_expr(coeff, self.params, path)
                if abs(v.imag) > 0:
                    raise ModelError(path, "structure constants must be real")
                if C[a, b, c] != 0 or C[b, a, c] != 0:
                    raise ModelError(path, "duplicate bracket component")
                C[a, b, c] = v.real
                C[b, a, c] = -v.real
        self.alg = LieAlgebra(dim, C, labels)
        anti = self.alg.antisymmetry_residual()
        if anti > 1e-12:
            raise ModelError("$.algebra.brackets", f"not antisymmetric ({anti:.2e})")

    def _index_of(self, ref, path):
        if isinstance(ref, int):
            if not 1 <= ref <= len(self.labels):
                raise ModelError(path, f"basis index {ref} out of range (1-based)")
            return ref - 1
        if ref in self.label_index:
            return self.label_index[ref]
        raise ModelError(path, f"unknown basis element {ref!r}")

    def _build_split(self):
        sec = _need(self.doc, "subalgebra", "$", dict)
        h = [self._index_of(r, "$.subalgebra.h") for r in _need(sec, "h", "$.subalgebra", list)]
        m = sorted(set(range(self.alg.dim)) - set(h))
        self.split = SubalgebraSplit(self.alg, h, m)
        if self.split.closure_residual() > 1e-12:
            raise ModelError("$.subalgebra.h", "h is not a subalgebra")

    def _build_form(self):
        sec = _need(self.doc, "bilinear_form", "$", dict)
        n = len(self.split.m)
        if "contravariant" in sec:
            Gup = _matrix_of_params(sec["contravariant"], self.params,
                                    "$.bilinear_form.contravariant", square=True)
            if np.max(np.abs(Gup.imag)) > 0:
                raise ModelError("$.bilinear_form", "form must be real")
            self.form = BilinearForm(np.linalg.inv(Gup.real))
        elif "covariant" in sec:
            G = _matrix_of_params(sec["covariant"], self.params,
                                  "$.bilinear_form.covariant", square=True)
            self.form = BilinearForm(G.real)
        else:
            raise ModelError("$.bilinear_form", "need 'covariant' or 'contravariant'")
        if self.form.dim != n:
            raise ModelError("$.bilinear_form", f"size must be dim(m) = {n}")

    def _build_rep_and_chart(self):
        sec = self.doc.get("matrix_rep")
        if sec is not None:
            mats = [
                _matrix_of_params(m, self.params, f"$.matrix_rep.matrices[{k}]",
                                  square=True)
                for k, m in enumerate(_need(sec, "matrices", "$.matrix_rep", list))
            ]
            self.rep = MatrixRep(self.alg, np.array(mats))
        else:
            self.rep = MatrixRep.adjoint(self.alg)
        chart = _need(self.doc, "chart", "$", dict)
        factors = [
            (name, self._index_of(ref, "$.chart.factors"))
            for name, ref in _need(chart, "factors", "$.chart", list)
        ]
        self.chart = ChartSpec(factors)
        self.m_coords = list(_need(chart, "m_coords", "$.chart", list))
        self.h_coords = list(chart.get("h_coords", []))
        if len(self.m_coords) != len(self.split.m):
            raise ModelError("$.chart.m_coords", "must list one name per m direction")
        if sorted(self.m_coords + self.h_coords) != sorted(self.chart.coord_names):
            raise ModelError("$.chart", "m_coords + h_coords must equal chart coords")
        self.engine = GroupEngine(self.alg, self.rep, self.chart)
        x_pos = [self.chart.coord_index(n) for n in self.m_coords]
        h_pos = [self.chart.coord_index(n) for n in self.h_coords]
        self.numeric_source = geometry.NumericFrameSource(
            self.engine, self.split, x_pos, h_pos
        )

    def _field_table(self):
        return SymbolTable(variables=self.m_coords, parameters=list(self.params))

    def _build_fields(self):
        sec = self.doc.get("fields")
        self.declared_source = None
        if sec is None:
            return
        st = self._field_table()
        coords = self.m_coords + self.h_coords

        def grid(rows, path):
            if len(rows) != self.alg.dim:
                raise ModelError(path, "need one row per basis element")
            out = []
            for r, row in enumerate(rows):
                if len(row) != len(coords):
                    raise ModelError(f"{path}[{r}]",
                                     f"need {len(coords)} components (m then h)")
                out.append([
                    CompiledExpr(str(e), st) if not _is_zero_literal(e) else _ZERO
                    for e in row
                ])
            return out

        eta = grid(_need(sec, "eta", "$.fields", list), "$.fields.eta")
        xi = grid(sec["xi"], "$.fields.xi") if "xi" in sec else None
        self.declared_source = geometry.DeclaredFrameSource(
            eta, self.params, len(self.m_coords), xi_exprs=xi
        )

    def frame_source(self, prefer="declared"):
        if prefer == "declared" and self.declared_source is not None:
            return self.declared_source
        return self.numeric_source

    def _build_gammas(self):
        sec = self.doc.get("gammas")
        self.pseudospin = None
        if sec is None:
            self.gammas = clifford.build_gammas(self.form)
        elif "matrices" in sec:
            mats = [
                _matrix_of_params(m, self.params, f"$.gammas.matrices[{k}]", square=True)
                for k, m in enumerate(sec["matrices"])
            ]
            self.gammas = clifford.GammaSet(np.array(mats), self.form)
            res = self.gammas.anticommutator_residual()
            if res > 1e-10:
                raise ModelError("$.gammas.matrices",
                                 f"anticommutation violated ({res:.2e})")
        else:
            ps = sec.get("pseudospin")
            ps = _param_expr(ps, self.params, "$.gammas.pseudospin").real if ps else None
            self.gammas = clifford.build_gammas(self.form, pseudospin=ps)
        if self.alg and len(self.split.m) % 2 == 1:
            self.pseudospin = self.gammas.pseudospin()
        self.lambdas = clifford.spin_generators(self.alg, self.split, self.gammas)
        self.gamma_consts = clifford.spin_connection_constants(
            self.alg, self.split, self.form, self.gammas
        )

    def _build_casimirs(self):
        self.casimirs = []
        for k, sec in enumerate(self.doc.get("casimirs", [])):
            path = f"$.casimirs[{k}]"
            poly = DualPolynomial.from_expression(
                _need(sec, "polynomial", path, str), self.alg.dim, self.params
            )
            value = sec.get("section_value")
            value = _param_expr(value, self.params, path) if value is not None else None
            self.casimirs.append((sec.get("name", f"K{k + 1}"), poly, value))
        self.identities = []
        for k, sec in enumerate(self.doc.get("identities", [])):
            path = f"$.identities[{k}]"
            poly = DualPolynomial.from_expression(
                _need(sec, "polynomial", path, str), self.alg.dim, self.params
            )
            kappa = sec.get("kappa")
            kappa = _param_expr(kappa, self.params, path) if kappa is not None else None
            self.identities.append((sec.get("name", f"F{k + 1}"), poly, kappa))

    def _build_orbit(self):
        sec = self.doc.get("orbit")
        self.orbit = None
        if sec is None:
            return
        lam = np.array([
            _param_expr(e, self.params, "$.orbit.lambda")
            for e in _need(sec, "lambda", "$.orbit", list)
        ])
        if lam.size != self.alg.dim:
            raise ModelError("$.orbit.lambda", "needs one component per basis element")
        self.orbit = {
            "lambda": lam,
            "orbit_dim": sec.get("orbit_dim"),
            "index": sec.get("index"),
        }

    def _build_polarization(self):
        rows = self.doc.get("polarization")
        self.polarization = None
        if rows is None:
            return
        P = np.zeros((len(rows), self.alg.dim), dtype=complex)
        for r, row in enumerate(rows):
            for ref, coeff in row.items():
                P[r, self._index_of(ref, f"$.polarization[{r}]")] = _param_expr(
                    coeff, self.params, f"$.polarization[{r}]"
                )
        self.polarization = PolarizationSpec(self.alg, P)

    def _build_lambda_rep(self):
        sec = self.doc.get("lambda_rep")
        self.lambda_rep = None
        self.measure = None
        if sec is None:
            return
        q_names = list(_need(sec, "vars", "$.lambda_rep", list))
        st = SymbolTable(variables=q_names, parameters=list(self.params))
        coeffs = [[None] * len(q_names) for _ in range(self.alg.dim)]
        pots = [None] * self.alg.dim
        ops = _need(sec, "operators", "$.lambda_rep", dict)
        for ref, spec in ops.items():
            A = self._index_of(ref, "$.lambda_rep.operators")
            for key, expr in spec.items():
                if key == "potential":
                    pots[A] = CompiledExpr(str(expr), st)
                elif key.startswith("d_") and key[2:] in q_names:
                    coeffs[A][q_names.index(key[2:])] = CompiledExpr(str(expr), st)
                else:
                    raise ModelError(f"$.lambda_rep.operators.{ref}",
                                     f"unknown key {key!r}")
        self.lambda_rep = LambdaRep(self.alg, q_names, coeffs, pots, self.params)
        if "measure" in sec:
            self.measure = CompiledExpr(str(sec["measure"]), st)
        self.q_domain = sec.get("q_domain")

    def _build_symmetry_polynomials(self):
        self.symmetry_polynomials = []
        for k, sec in enumerate(self.doc.get("symmetry_polynomials", [])):
            path = f"$.symmetry_polynomials[{k}]"
            words = []
            for coeff, refs in _need(sec, "words", path, list):
                idxs = tuple(self._index_of(r, path) for r in refs)
                words.append((_param_expr(coeff, self.params, path)
                              if isinstance(coeff, str) else complex(coeff), idxs))
            rel = {}
            for key in ("commutes_with_dirac", "dirac_multiple", "solution_eigenvalue"):
                if key in sec:
                    rel[key] = sec[key]
            self.symmetry_polynomials.append(
                {"name": sec.get("name", f"P{k + 1}"), "words": words, **rel}
            )

    # -- conveniences -------------------------------------------------------

    def real_param(self, name, default=None):
        if name not in self.params:
            if default is not None:
                return default
            raise KeyError(name)
        return float(self.params[name].real)

    def verification_box(self):
        box = self.verification.get(
            "box_m", [[-0.3, 0.3]] * len(self.m_coords)
        )
        return [tuple(b) for b in box]


_ZERO = None


def _is_zero_literal(e):
    return e is None or e == 0 or e == "0"


def load_model(path):
    """Parse, schema-validate and assemble a model file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ModelError("$", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelError("$", "top level must be an object")
    return Model(doc, path=str(path))


def bundled_model_path(name):
    import importlib.resources

    return importlib.resources.files("ncidirac") / "models" / f"{name}.json"
