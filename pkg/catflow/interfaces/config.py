import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

from domain.entities.fock import FockDims
from domain.entities.model import ModelParams
from domain.entities.trajectory import IntegratorConfig
from domain.exceptions import ConfigValidationError
from domain.services.cat_model import build_model
from domain.services.evolve import default_dt
from interfaces.serializers import RunConfigSerializer, flatten_errors


@dataclass(frozen=True)
class InitialStateSpec:
    kind: str
    n: int = 0
    m: int = 0
    z: complex = 0j
    epsilon: float = 0.1
    random: bool = False


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    model: ModelParams
    integrator: IntegratorConfig
    initial_state: Optional[InitialStateSpec]
    output_dir: str
    seed: int
    leakage_ceiling: Optional[float]
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    resolved: Dict[str, Any] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Any]:
        return self.sections.get(name, {})


def _coerce(value: str) -> Any:
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply `dotted.key=value` flags on top of the file contents."""
    errors = []
    for item in overrides:
        if "=" not in item:
            errors.append(f"--set {item}: expected key=value")
            continue
        path, raw = item.split("=", 1)
        keys = path.strip().split(".")
        node = data
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                errors.append(f"--set {item}: '{key}' is not a section")
                break
        else:
            node[keys[-1]] = _coerce(raw)
    if errors:
        raise ConfigValidationError(errors)
    return data


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def parse_config(text: str, overrides: Sequence[str] = (), output_dir: Optional[str] = None) -> RunConfig:
    """Validate a JSON run config; precedence is flags > file > defaults."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([f"invalid JSON: {exc}"])
    if not isinstance(data, dict):
        raise ConfigValidationError(["config must be a JSON object"])
    data = apply_overrides(data, overrides)
    if output_dir:
        data["output_dir"] = output_dir

    serializer = RunConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigValidationError(flatten_errors(serializer.errors))
    values = _plain(serializer.validated_data)

    m = values["model"]
    params = ModelParams(k=m["k"], alpha=float(m["alpha"]), kappa=m["kappa"], dims=FockDims(na=m["na"], nb=m["nb"]))

    integ = dict(values.get("integrator") or {"t_max": 1.0})
    if integ.get("dt") is None:
        integ["dt"] = min(default_dt(build_model(params)), integ["t_max"])
    integrator = IntegratorConfig(
        dt=integ["dt"],
        t_max=integ["t_max"],
        method=integ.get("method", "rk4_fixed"),
        rel_tol=integ.get("rel_tol", 1e-6),
        record_every=integ.get("record_every", 1),
        snapshot_states=integ.get("snapshot_states", False),
    )
    values["integrator"] = {**integ, "method": integrator.method, "rel_tol": integrator.rel_tol,
                            "record_every": integrator.record_every, "snapshot_states": integrator.snapshot_states}

    initial = None
    if "initial_state" in values:
        s = values["initial_state"]
        initial = InitialStateSpec(kind=s["kind"], n=s["n"], m=s["m"], z=complex(s["z_re"], s["z_im"]),
                                   epsilon=s["epsilon"], random=s["random"])

    sections = {name: values[name] for name in ("sweep", "density", "lyapunov", "block", "witness") if name in values}
    return RunConfig(
        experiment=values["experiment"],
        model=params,
        integrator=integrator,
        initial_state=initial,
        output_dir=values["output_dir"],
        seed=values["seed"],
        leakage_ceiling=values["leakage_ceiling"],
        sections=sections,
        resolved=values,
    )
