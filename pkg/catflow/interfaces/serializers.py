from django.conf import settings
from rest_framework import serializers

EXPERIMENTS = (
    "simulate",
    "sweep-kappa",
    "density-check",
    "lyapunov-check",
    "adiabatic-compare",
    "block-check",
    "ns-witness",
)

# Sections each experiment cannot run without.
REQUIRED_SECTIONS = {
    "simulate": ("integrator", "initial_state"),
    "sweep-kappa": ("sweep", "initial_state"),
    "density-check": ("density",),
    "adiabatic-compare": ("integrator", "initial_state"),
    "ns-witness": ("witness",),
}


class StrictSerializer(serializers.Serializer):
    """Rejects unknown keys alongside the regular field errors."""

    def to_internal_value(self, data):
        errors = {}
        value = {}
        try:
            value = super().to_internal_value(data)
        except serializers.ValidationError as exc:
            errors.update(exc.detail)
        if isinstance(data, dict):
            for key in sorted(set(data) - set(self.fields)):
                errors[key] = [f"Unknown key '{key}'."]
        if errors:
            raise serializers.ValidationError(errors)
        return value


class ModelSerializer(StrictSerializer):
    k = serializers.IntegerField()
    alpha = serializers.FloatField(default=0.0)
    kappa = serializers.FloatField()
    na = serializers.IntegerField()
    nb = serializers.IntegerField()

    def validate_k(self, value):
        if value < 1:
            raise serializers.ValidationError("k must be ≥ 1")
        return value

    def validate_kappa(self, value):
        if value <= 0:
            raise serializers.ValidationError("kappa must be > 0")
        return value

    def validate_nb(self, value):
        if value < 2:
            raise serializers.ValidationError("nb must be ≥ 2")
        return value

    def validate(self, attrs):
        if attrs["na"] <= attrs["k"]:
            raise serializers.ValidationError({"na": [f"na must exceed k ({attrs['k']})"]})
        return attrs


class IntegratorSerializer(StrictSerializer):
    dt = serializers.FloatField(required=False, allow_null=True, default=None)
    t_max = serializers.FloatField()
    method = serializers.ChoiceField(choices=["rk4_fixed", "rk4_adaptive"], default="rk4_fixed")
    rel_tol = serializers.FloatField(default=1e-6)
    record_every = serializers.IntegerField(default=1, min_value=1)
    snapshot_states = serializers.BooleanField(default=False)

    def validate_dt(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("dt must be > 0")
        return value

    def validate_t_max(self, value):
        if value <= 0:
            raise serializers.ValidationError("t_max must be > 0")
        return value

    def validate_rel_tol(self, value):
        if not 0 < value <= 1e-2:
            raise serializers.ValidationError("rel_tol must lie in (0, 1e-2]")
        return value

    def validate(self, attrs):
        if attrs.get("dt") is not None and attrs["dt"] > attrs["t_max"]:
            raise serializers.ValidationError({"dt": ["dt must not exceed t_max"]})
        return attrs


class InitialStateSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=["fock", "coherent", "cat-perturbed"])
    n = serializers.IntegerField(default=0, min_value=0)
    m = serializers.IntegerField(default=0, min_value=0)
    z_re = serializers.FloatField(default=0.0)
    z_im = serializers.FloatField(default=0.0)
    epsilon = serializers.FloatField(default=0.1)
    random = serializers.BooleanField(default=False)


class SweepSerializer(StrictSerializer):
    kappas = serializers.ListField(child=serializers.FloatField(min_value=0.0), min_length=2)
    t = serializers.FloatField(default=2.0, min_value=0.0)


class DensitySerializer(StrictSerializer):
    degree_budget = serializers.IntegerField(default=30, min_value=0)
    interior_na = serializers.IntegerField(min_value=1)
    interior_nb = serializers.IntegerField(min_value=1)
    single_mode_budget = serializers.IntegerField(default=3, min_value=0)
    single_mode_interior_na = serializers.IntegerField(required=False, min_value=1)


class LyapunovSerializer(StrictSerializer):
    mu_grid = serializers.ListField(child=serializers.FloatField(min_value=0.0), default=[0.0, 0.05, 0.1, 0.2])
    c2_grid = serializers.ListField(child=serializers.FloatField(), default=[0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0])
    interior_margin = serializers.IntegerField(required=False, min_value=1)


class BlockSerializer(StrictSerializer):
    times = serializers.ListField(child=serializers.FloatField(min_value=0.0), default=[0.5, 1.0, 2.0])
    recursion_t0 = serializers.FloatField(default=0.5)
    recursion_steps = serializers.IntegerField(default=4, min_value=1)


class WitnessSerializer(StrictSerializer):
    interior_na = serializers.IntegerField(min_value=1)
    family = serializers.ChoiceField(choices=["cat", "exp"], default="cat")
    zero_order = serializers.IntegerField(default=0, min_value=0)


class RunConfigSerializer(StrictSerializer):
    experiment = serializers.ChoiceField(choices=EXPERIMENTS)
    model = ModelSerializer()
    integrator = IntegratorSerializer(required=False)
    initial_state = InitialStateSerializer(required=False)
    output_dir = serializers.CharField(required=False)
    seed = serializers.IntegerField(default=0)
    leakage_ceiling = serializers.FloatField(required=False, allow_null=True)
    sweep = SweepSerializer(required=False)
    density = DensitySerializer(required=False)
    lyapunov = LyapunovSerializer(required=False)
    block = BlockSerializer(required=False)
    witness = WitnessSerializer(required=False)

    def validate(self, attrs):
        missing = {
            section: [f"This field is required for {attrs['experiment']}."]
            for section in REQUIRED_SECTIONS.get(attrs["experiment"], ())
            if section not in attrs
        }
        if missing:
            raise serializers.ValidationError(missing)
        for name, section in (("lyapunov", LyapunovSerializer), ("block", BlockSerializer)):
            if name not in attrs:
                defaults = section(data={})
                defaults.is_valid(raise_exception=True)
                attrs[name] = defaults.validated_data
        attrs.setdefault("output_dir", str(settings.CATFLOW_OUTPUT_DIR) + "/" + attrs["experiment"])
        attrs.setdefault("leakage_ceiling", settings.CATFLOW_LEAKAGE_CEILING)
        return attrs


def flatten_errors(detail, prefix=""):
    """DRF error detail -> ["model.k: k must be ≥ 1", ...]."""
    if isinstance(detail, dict):
        messages = []
        for key, value in detail.items():
            if key == "non_field_errors":
                path = prefix
            else:
                path = f"{prefix}.{key}" if prefix else key
            messages += flatten_errors(value, path)
        return messages
    if isinstance(detail, list):
        messages = []
        for item in detail:
            messages += flatten_errors(item, prefix)
        return messages
    return [f"{prefix}: {detail}" if prefix else str(detail)]
