"""Quadratic map analysis client wrapper."""

from __future__ import annotations

import asyncio
from collections.abc import Callable
import json
import os
import time

import aiofiles
import numpy as np
import voluptuous as vol

from .const import (
    EXAMPLESFOLDER,
    LOGGER,
    MAP_SCHEMA,
    MAPFILE,
    SCENARIO_SCHEMA,
    SCENARIOFILE,
)
from .quadapi import convexcut, errors, nonconvexity, oracles, quadmap
from .quadapi.sampling import derived_rng, random_points
from .quadapi.types import (
    DEFAULT_DESCENT,
    DEFAULT_TOLERANCES,
    DescentConfig,
    Membership,
    ToleranceConfig,
)
from .report import AnalysisReport, fingerprint, plain
from .sweep import sweep_section

_LOGGER = LOGGER


def json_example_folders() -> list:
    """Get actual list of json example folders."""
    examplesfolder: str = os.path.join(os.path.dirname(__file__), EXAMPLESFOLDER)
    if os.path.isdir(examplesfolder):
        return sorted(f.name for f in os.scandir(examplesfolder) if f.is_dir())
    return []


def example_folder(example: str | int) -> str:
    """Return the folder path of a bundled example given by number or folder name."""
    name = f"example{example}" if str(example).isdigit() else str(example)
    if name not in json_example_folders():
        raise QuadMapClientInputError(f"Unknown example: {example}")
    return os.path.join(os.path.dirname(__file__), EXAMPLESFOLDER, name)


class QuadMapClientError(Exception):
    """Exception to indicate a general analysis error."""


class QuadMapClientInputError(QuadMapClientError):
    """Exception to indicate invalid input data or arguments."""


class QuadMapClientIndeterminateError(QuadMapClientError):
    """Exception to indicate an undecided numerical result."""


class QuadMapClientUnboundedError(QuadMapClientError):
    """Exception to indicate an unbounded direction of the image."""


class QuadMapClientTrivialBError(QuadMapClientError):
    """Exception to indicate a map with trivial linear part."""


class QuadMapClientNotDefiniteError(QuadMapClientError):
    """Exception to indicate a map that is not definite."""


class QuadMapClientNotFoundError(QuadMapClientError):
    """Exception to indicate that a search found nothing."""


def _schema_path(err: vol.Invalid) -> str:
    path = ""
    for key in err.path:
        path += f"[{key}]" if isinstance(key, int) else (f".{key}" if path else str(key))
    return path or "<root>"


class QuadMapClient:
    """Analysis client running the quadapi routines off the event loop.

    options: Optionally override tolerances with tol_rank and tol_feas and set the default seed
    """

    def __init__(self, options: dict | None = None) -> None:
        """Init analysis client."""
        data = options or {}
        self.tolerances: ToleranceConfig = DEFAULT_TOLERANCES.with_overrides(
            rank_tol=data.get("tol_rank"),
            feas_tol=data.get("tol_feas"),
        )
        self.descent: DescentConfig = data.get("descent", DEFAULT_DESCENT)
        self.seed: int = int(data.get("seed") or 0)

    async def _run(self, label: str, func: Callable, *args, **kwargs):
        """Run a library call in a worker thread and translate its errors."""
        try:
            return await asyncio.to_thread(func, *args, **kwargs)
        except QuadMapClientError:
            raise
        except (
            errors.InvalidInputError,
            errors.NotInteriorPointError,
            errors.DimensionUnsupportedError,
            errors.HomogeneousMapError,
            errors.InhomogeneousMapError,
        ) as exception:
            raise QuadMapClientInputError(f"{label}: {exception}") from exception
        except (errors.IndeterminateError, errors.NumericalTroubleError) as exception:
            raise QuadMapClientIndeterminateError(f"{label}: {exception}") from exception
        except errors.UnboundedError as exception:
            raise QuadMapClientUnboundedError(f"{label}: {exception}") from exception
        except errors.TrivialBError as exception:
            raise QuadMapClientTrivialBError(f"{label}: {exception}") from exception
        except (errors.NotDefiniteError, errors.NotPositiveDefiniteError) as exception:
            raise QuadMapClientNotDefiniteError(f"{label}: {exception}") from exception
        except (errors.NoCMinusFoundError, errors.NoSupportingHyperplaneError) as exception:
            raise QuadMapClientNotFoundError(f"{label}: {exception}") from exception
        except Exception as exception:  # pylint: disable=broad-except
            raise QuadMapClientError(
                f"{label} failed: {type(exception)}: {exception}"
            ) from exception

    async def _load_json(self, filename: str) -> dict:
        """Load json data from given file."""
        try:
            async with aiofiles.open(filename, encoding="utf-8") as file:
                data = json.loads(await file.read())
        except OSError as err:
            _LOGGER.error("ERROR: Failed to load JSON from file %s", filename)
            raise QuadMapClientInputError(f"Cannot read {filename}: {err}") from err
        except json.JSONDecodeError as err:
            raise QuadMapClientInputError(
                f"{filename}: invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}"
            ) from err
        _LOGGER.debug("Loaded JSON from file %s", filename)
        return data

    async def async_save(self, filename: str, text: str) -> None:
        """Save text output to given file."""
        try:
            async with aiofiles.open(filename, "w", encoding="utf-8") as file:
                await file.write(text)
        except OSError as err:
            _LOGGER.error("ERROR: Failed to save output to file %s", filename)
            raise QuadMapClientInputError(f"Cannot write {filename}: {err}") from err
        _LOGGER.debug("Saved output to file %s", filename)

    def parse_map(self, data: dict, name: str = "") -> quadmap.QuadraticMap:
        """Validate the JSON representation of a map and build it."""
        try:
            validated = MAP_SCHEMA(data)
            return quadmap.map_from_dict(validated, name=name)
        except vol.Invalid as err:
            raise QuadMapClientInputError(
                f"Schema error at {_schema_path(err)}: {err.error_message}"
            ) from err
        except errors.QuadMapError as err:
            raise QuadMapClientInputError(f"Invalid map: {err}") from err

    async def async_load_map(self, filename: str) -> quadmap.QuadraticMap:
        """Load and validate a map file."""
        data = await self._load_json(filename)
        name = os.path.splitext(os.path.basename(filename))[0]
        return self.parse_map(data, name=name)

    async def async_load_example(self, example: str | int) -> tuple[quadmap.QuadraticMap, dict]:
        """Load map and scenario of a bundled example."""
        folder = example_folder(example)
        qmap = await self.async_load_map(os.path.join(folder, MAPFILE))
        scenario = {"example": 0}
        if os.path.isfile(os.path.join(folder, SCENARIOFILE)):
            scenario = await self._load_json(os.path.join(folder, SCENARIOFILE))
        try:
            scenario = SCENARIO_SCHEMA(scenario)
        except vol.Invalid as err:
            raise QuadMapClientInputError(
                f"Scenario schema error at {_schema_path(err)}: {err.error_message}"
            ) from err
        return qmap, scenario

    def _report(self, command: str, qmap: quadmap.QuadraticMap, **arguments) -> AnalysisReport:
        return AnalysisReport(
            command=command,
            arguments=arguments,
            fingerprint=fingerprint(qmap),
            seed=arguments.get("seed"),
            tolerances=self.tolerances.as_dict(),
        )

    async def async_validate(self, qmap: quadmap.QuadraticMap) -> AnalysisReport:
        """Report field, dimensions, hermiticity, b-triviality and definiteness of a map."""
        report = self._report("validate", qmap)
        start = time.perf_counter()
        triviality = quadmap.is_b_trivial(qmap, self.tolerances.triviality_tol)
        c_plus = await self._run(
            "Definiteness test", quadmap.find_definite_direction, qmap, self.tolerances
        )
        report.result = {
            "name": qmap.name,
            "field": qmap.field.value,
            "n": qmap.n,
            "m": qmap.m,
            "hermitian_deviation": qmap.hermitian_deviation,
            "b_trivial": triviality.trivial,
            "triviality_residual": triviality.residual,
            "definite": c_plus is not None,
            "c_plus": None if c_plus is None else plain(c_plus),
        }
        report.wall_time = time.perf_counter() - start
        return report

    def _self_check(self, qmap: quadmap.QuadraticMap, count: int, seed: int) -> list:
        """Return the images f(x) of count random points that were certified infeasible."""
        points = random_points(derived_rng(seed, 0), count, qmap.n, qmap.field)
        certified = []
        for y in quadmap.evaluate_many(qmap, points):
            if oracles.infeasibility_oracle(qmap, y, self.tolerances) is not None:
                _LOGGER.warning("Image point %s was certified infeasible", y)
                certified.append(y)
        return certified

    async def async_feasible(
        self, qmap: quadmap.QuadraticMap, y0, self_check: int = 0, seed: int | None = None
    ) -> AnalysisReport:
        """Search an infeasibility certificate for y0, or self-check random image points."""
        seed = self.seed if seed is None else seed
        report = self._report("feasible", qmap, y0=y0, self_check=self_check, seed=seed)
        start = time.perf_counter()
        if self_check:
            certified = await self._run("Self check", self._self_check, qmap, self_check, seed)
            report.status = "ok" if not certified else "certified"
            report.result = {"checked": self_check, "certified": plain(certified)}
        else:
            if y0 is None:
                raise QuadMapClientInputError("Feasibility test needs a point y0")
            y0 = await self._run("Feasibility input", qmap.coefficients, y0)
            certificate = await self._run(
                "Infeasibility search", oracles.infeasibility_oracle, qmap, y0, self.tolerances
            )
            if certificate is None:
                membership = await self._run(
                    "Membership test", oracles.membership_relaxation, qmap, y0, self.tolerances
                )
                report.status = "infeasible" if membership is Membership.not_in_g else "ok"
                report.result = {"membership": membership.value, "certificate": None}
            else:
                report.status = "infeasible"
                report.result = {
                    "membership": Membership.not_in_g.value,
                    "certificate": {
                        "c": plain(certificate.c),
                        "min_eigenvalue": certificate.min_eigenvalue,
                        "verified": oracles.verify_certificate(qmap, certificate),
                    },
                }
        report.wall_time = time.perf_counter() - start
        return report

    async def async_boundary(self, qmap: quadmap.QuadraticMap, y, d) -> AnalysisReport:
        """Return the boundary point of G along d from y."""
        report = self._report("boundary", qmap, y=y, d=d)
        start = time.perf_counter()
        result = await self._run(
            "Boundary oracle", oracles.boundary_oracle, qmap, y, d, self.tolerances
        )
        report.result = {
            "t": result.t,
            "point": plain(result.point),
            "direction": plain(result.direction),
            "rank_estimate": result.rank_estimate,
            "on_F": result.on_f.value,
        }
        report.wall_time = time.perf_counter() - start
        return report

    async def async_support(self, qmap: quadmap.QuadraticMap, y, d) -> AnalysisReport:
        """Return the supporting normal of G hit along d from y."""
        report = self._report("support", qmap, y=y, d=d)
        start = time.perf_counter()
        result = await self._run("Support vector", oracles.get_c_from_d, qmap, y, d, self.tolerances)
        report.result = {
            "c": plain(result.c),
            "c_unit": plain(result.unit),
            "gamma": result.gamma,
            "value": result.value,
        }
        report.wall_time = time.perf_counter() - start
        return report

    async def async_certify(
        self,
        qmap: quadmap.QuadraticMap,
        seed: int | None = None,
        iters: int = 100,
        c_plus=None,
    ) -> AnalysisReport:
        """Search a certificate of non-convexity of the image."""
        seed = self.seed if seed is None else seed
        report = self._report("certify", qmap, seed=seed, iters=iters, c_plus=c_plus)
        start = time.perf_counter()
        certificate = await self._run(
            "Certificate search",
            nonconvexity.nonconvexity_certificate,
            qmap,
            seed=seed,
            max_iters=iters,
            c_plus=c_plus,
            tolerances=self.tolerances,
            descent=self.descent,
        )
        if certificate is None:
            report.status = "none"
            report.result = {"certificate": None}
        else:
            report.result = {
                "certificate": plain(certificate),
                "verified": nonconvexity.verify_nonconvexity(qmap, certificate, self.tolerances),
            }
        report.wall_time = time.perf_counter() - start
        return report

    async def async_zmax(
        self,
        qmap: quadmap.QuadraticMap,
        c_plus=None,
        seed: int | None = None,
        restarts: int = 100,
        z_guess: float | None = None,
    ) -> AnalysisReport:
        """Compute z_max and the cut level of the convex cut."""
        seed = self.seed if seed is None else seed
        report = self._report(
            "zmax", qmap, c_plus=c_plus, seed=seed, restarts=restarts, z_guess=z_guess
        )
        start = time.perf_counter()
        result = await self._run(
            "z_max search",
            convexcut.get_z_max,
            qmap,
            c_plus,
            convexcut.ZMaxOptions(seed=seed, restarts=restarts, z_guess=z_guess),
            self.tolerances,
            self.descent,
        )
        report.result = zmax_payload(result)
        report.wall_time = time.perf_counter() - start
        return report

    async def async_sweep(
        self, qmap: quadmap.QuadraticMap, fixed: dict[int, float], rays: int = 360
    ) -> tuple[AnalysisReport, str]:
        """Sweep a two dimensional section of G, returning the report and the CSV text."""
        report = self._report("sweep", qmap, fixed=fixed, rays=rays)
        start = time.perf_counter()
        sweep = await self._run("Section sweep", sweep_section, qmap, fixed, rays, self.tolerances)
        report.result = {
            "centre": plain(sweep.centre),
            "margin": sweep.margin,
            "free": list(sweep.free),
            "rays": len(sweep.rows),
            "convex": sweep.is_convex(),
            "rank_arcs": sweep.rank_arcs(),
        }
        report.wall_time = time.perf_counter() - start
        return report, sweep.to_csv()

    async def async_run_example(self, example: str | int) -> AnalysisReport:
        """Run the scripted checks of a bundled example against its expected values."""
        qmap, scenario = await self.async_load_example(example)
        report = self._report("example", qmap, example=str(example), seed=scenario["seed"])
        start = time.perf_counter()
        runner = _ScenarioRunner(self, qmap, scenario)
        checks = [await runner.check(item) for item in scenario["checks"]]
        report.result = {"description": scenario["description"], "checks": checks}
        report.status = "ok" if all(check["passed"] for check in checks) else "mismatch"
        report.wall_time = time.perf_counter() - start
        _LOGGER.info("Example %s: %s", example, report.status)
        return report


def zmax_payload(result: convexcut.ZMaxResult) -> dict:
    """Return the reportable content of a z_max search."""
    return {
        "z_max": result.z_max,
        "cut_level": result.cut_level,
        "c_star": plain(result.c_star),
        "groups": result.groups,
        "local_minima": plain(result.local_minima),
        "z_guess": result.z_guess,
        "improved": result.improved,
        "shift_norm": result.transform.shift_norm,
        "runs": [
            {
                "iteration": run.start.iteration,
                "group": run.group,
                "start_c": plain(run.start_c),
                "start_z": run.result.start_z,
                "z": run.result.z,
                "c": plain(run.result.p),
                "reason": run.result.reason.value,
                "steps": len(run.result.trace.accepted) - 1,
            }
            for run in result.runs
        ],
    }


class _ScenarioRunner:
    """Evaluate the checks of one example scenario, sharing the expensive searches."""

    def __init__(self, client: QuadMapClient, qmap: quadmap.QuadraticMap, scenario: dict) -> None:
        self.client = client
        self.qmap = qmap
        self.scenario = scenario
        self._zmax: convexcut.ZMaxResult | None = None

    @property
    def c_plus(self):
        return self.scenario.get("c_plus")

    async def _get_zmax(self) -> convexcut.ZMaxResult:
        if self._zmax is None:
            self._zmax = await self.client._run(
                "z_max search",
                convexcut.get_z_max,
                self.qmap,
                self.c_plus,
                convexcut.ZMaxOptions(
                    seed=self.scenario["seed"],
                    restarts=self.scenario["restarts"],
                    z_guess=self.scenario.get("z_guess"),
                ),
                self.client.tolerances,
                self.client.descent,
            )
        return self._zmax

    def _z_of_c(self, c) -> float:
        c_plus = self.c_plus
        if c_plus is None:
            c_plus = quadmap.find_definite_direction(self.qmap, self.client.tolerances)
        nmap, transform = quadmap.normalize_for_cut(self.qmap, c_plus, self.client.tolerances)
        state = convexcut.DescentState.build(nmap, transform.c_plus, c, self.client.tolerances)
        return convexcut.z_of_c(state)

    async def check(self, item: dict) -> dict:  # noqa: C901
        kind = item["kind"]
        expected = item.get("expected")
        tol = item["tol"]
        value = None
        passed = False
        try:
            if kind == "z_max":
                value = (await self._get_zmax()).z_max
                passed = abs(value - expected) <= tol
            elif kind == "z_of_c":
                value = await self.client._run("z(c)", self._z_of_c, item["c"])
                passed = abs(value - expected) <= tol
            elif kind == "boundary_t":
                result = await self.client._run(
                    "Boundary oracle",
                    oracles.boundary_oracle,
                    self.qmap,
                    item["y"],
                    item["d"],
                    self.client.tolerances,
                )
                value = result.t
                passed = abs(value - expected) <= tol
            elif kind == "support_c":
                result = await self.client._run(
                    "Support vector",
                    oracles.get_c_from_d,
                    self.qmap,
                    item["y"],
                    item["d"],
                    self.client.tolerances,
                )
                value = result.unit
                target = np.asarray(expected, dtype=float)
                target = target / np.linalg.norm(target)
                passed = bool(np.max(np.abs(value - target)) <= tol)
            elif kind == "certificate":
                certificate = await self.client._run(
                    "Certificate search",
                    nonconvexity.nonconvexity_certificate,
                    self.qmap,
                    seed=self.scenario["seed"],
                    max_iters=self.scenario["iters"],
                    c_plus=self.c_plus,
                    tolerances=self.client.tolerances,
                    descent=self.client.descent,
                )
                value = None if certificate is None else certificate.kind.value
                passed = certificate is not None if expected is None else bool(expected) == (
                    certificate is not None
                )
            elif kind == "trivial_b_error":
                try:
                    await self._get_zmax()
                except QuadMapClientTrivialBError as err:
                    value = str(err)
                    passed = True
            elif kind == "self_check":
                certified = await self.client._run(
                    "Self check",
                    self.client._self_check,
                    self.qmap,
                    item.get("count", 50),
                    self.scenario["seed"],
                )
                value = len(certified)
                passed = not certified
        except QuadMapClientError as err:
            _LOGGER.warning("Check %s failed: %s", kind, err)
            value = str(err)
            passed = False
        _LOGGER.info("Check %s: %s (value %s, expected %s)", kind, passed, value, expected)
        return {
            "kind": kind,
            "passed": passed,
            "value": plain(value),
            "expected": plain(expected),
            "tol": tol,
        }
