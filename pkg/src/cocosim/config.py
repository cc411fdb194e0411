"""Experiment configuration: JSON documents, schema validation, presets.

A configuration is a single JSON object selecting an experiment (a figure
preset or "custom"), the model parameters, and optional overrides. Validation
collects every violation with its JSON path instead of stopping at the first,
so a config can be fixed in one pass. The JSON Schema ships with the package
(schema/experiment.schema.json); cross-field constraints the schema cannot
express (cost-bound ordering, burn-in versus total steps, a nonempty
measurement window) are checked here on top.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from cocosim.core import ConfigError, ModelParams

EXPERIMENT_IDS = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7",
                  "fig8", "fig9", "fig10", "custom")

# override keys each experiment understands; anything else is rejected
_COMMON = {"replicates"}
ALLOWED_OVERRIDES = {
    "fig1": _COMMON | {"c_grid", "total_steps", "burn_in_steps"},
    "fig2": _COMMON | {"c", "total_steps", "burn_in_steps", "export_matrix"},
    "fig3": _COMMON | {"total_steps", "burn_in_steps"},
    "fig4": _COMMON | {"total_steps", "burn_in_steps"},
    "fig5": {"gammas", "eps_fix_grid", "total_steps", "alpha"},
    "fig6": {"gammas", "total_steps", "alpha"},
    "fig7": _COMMON | {"deltas", "total_steps", "alpha", "record_every",
                       "exploration_amplitude"},
    "fig8": _COMMON | {"n_agents_list", "alpha", "exploration_amplitude"},
    "fig9": {"gammas", "eps0_grid", "c0_grid", "runs", "steps", "alpha"},
    "fig10": {"eps0_grid", "c0_grid", "runs", "steps", "alpha"},
    "custom": {"scheme", "self_trade_mode", "scenario", "total_steps",
               "burn_in_steps", "eps0", "replicates", "alpha",
               "exploration_amplitude", "eps_fix", "v1_init", "v0_init",
               "variant", "c", "sigma_bar", "init", "t_end", "dt", "k_moments",
               "chain_variant", "export_matrix", "gammas", "record_every",
               "runs", "steps", "eps0_grid", "c0_grid", "eps_fix_grid"},
}


@dataclass(frozen=True)
class ValidationIssue:
    path: str        # JSON path, e.g. $.params.f
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ConfigValidationError(ConfigError):
    """Carries the full list of validation issues."""

    def __init__(self, issues: list[ValidationIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


@dataclass
class ExperimentSpec:
    """A validated experiment: id, parameters, overrides, output directory."""

    id: str
    params: ModelParams
    overrides: dict = field(default_factory=dict)
    output_dir: Path = Path("out")

    def document(self) -> dict:
        """Canonical JSON document equivalent to this spec."""
        return {
            "experiment": self.id,
            "params": self.params.to_dict(),
            "overrides": self.overrides,
            "output_dir": str(self.output_dir),
        }

    def config_hash(self) -> str:
        """Hash of everything that determines the outputs (not the out dir)."""
        import hashlib
        doc = self.document()
        del doc["output_dir"]
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def load_schema() -> dict:
    text = resources.files("cocosim").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


def _cross_field_issues(doc: dict) -> list[ValidationIssue]:
    issues = []
    params = doc.get("params", {})
    if isinstance(params, dict):
        c_min = params.get("c_min", ModelParams.c_min)
        c_max = params.get("c_max", ModelParams.c_max)
        if isinstance(c_min, (int, float)) and isinstance(c_max, (int, float)):
            if not c_min < c_max:
                issues.append(ValidationIssue(
                    "$.params.c_min", f"must be below c_max ({c_min} >= {c_max})"))
    ov = doc.get("overrides", {})
    exp = doc.get("experiment")
    if isinstance(ov, dict):
        if exp in ALLOWED_OVERRIDES:
            for key in sorted(set(ov) - ALLOWED_OVERRIDES[exp]):
                issues.append(ValidationIssue(
                    f"$.overrides.{key}", f"not an override of experiment {exp!r}"))
        total = ov.get("total_steps")
        burn = ov.get("burn_in_steps")
        if isinstance(total, int) and isinstance(burn, int):
            if burn >= total:
                issues.append(ValidationIssue(
                    "$.overrides.burn_in_steps",
                    f"must leave a measurement window (burn {burn} >= total {total})"))
        scenario = ov.get("scenario")
        if isinstance(scenario, dict):
            kind = scenario.get("kind")
            if kind == "homogeneous" and "c" not in scenario:
                issues.append(ValidationIssue(
                    "$.overrides.scenario", "homogeneous scenario needs c"))
            if kind == "two_point" and not {"c_a", "c_b"} <= set(scenario):
                issues.append(ValidationIssue(
                    "$.overrides.scenario", "two_point scenario needs c_a and c_b"))
    return issues


def validate_config(doc: dict) -> ExperimentSpec:
    """Validate a JSON document and build the ExperimentSpec.

    Raises ConfigValidationError listing every violation (schema and
    cross-field) with its JSON path.
    """
    if not isinstance(doc, dict):
        raise ConfigValidationError(
            [ValidationIssue("$", f"expected an object, got {type(doc).__name__}")])
    validator = jsonschema.Draft202012Validator(load_schema())
    issues = [
        ValidationIssue(err.json_path, err.message)
        for err in sorted(validator.iter_errors(doc), key=lambda e: e.json_path)
    ]
    issues.extend(_cross_field_issues(doc))
    if issues:
        raise ConfigValidationError(issues)
    try:
        params = ModelParams.from_dict(doc.get("params", {}))
    except ConfigError as exc:
        raise ConfigValidationError([ValidationIssue("$.params", str(exc))])
    return ExperimentSpec(
        id=doc["experiment"],
        params=params,
        overrides=dict(doc.get("overrides", {})),
        output_dir=Path(doc.get("output_dir", "out")),
    )


def load_config(path) -> ExperimentSpec:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigValidationError(
                [ValidationIssue("$", f"invalid JSON: {exc}")])
    return validate_config(doc)
