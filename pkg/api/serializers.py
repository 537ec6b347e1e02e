from django.conf import settings
from rest_framework import serializers

from .models import Experiment, ExperimentRun, EstimatorControls
from .services.errors import ConfigurationError
from .services.estimator import EstimatorParams
from .services.extraction import LOST_POLICIES, SLOPE_METHODS, ExtractionParams
from .services.geometry import PolygonTarget
from .services.harness import SWEEP_AXES, ExperimentSpec
from .services.presets import PRESETS, get_preset
from .services.simulation import DeploymentInfo, RangeTrace, SimConfig


class PolygonSerializer(serializers.Serializer):
    """Directed edges walked counterclockwise from an anchor"""
    edges = serializers.ListField(child=serializers.DictField(), min_length=1)
    anchor = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2, required=False)
    closed = serializers.BooleanField(default=True)

    def validate(self, data):
        try:
            poly = PolygonTarget.from_dict(data).validate()
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))
        data['polygon'] = poly
        return data


class SimConfigSerializer(serializers.Serializer):
    omega_width = serializers.FloatField(default=5000.0)
    omega_height = serializers.FloatField(default=300.0)
    n_s = serializers.IntegerField(default=2000, min_value=1)
    r_max = serializers.FloatField(default=100.0)
    v = serializers.FloatField(default=1.0)
    dt = serializers.FloatField(default=1.0)
    p_b = serializers.FloatField(default=0.0, min_value=0.0, max_value=1.0)
    sigma_s = serializers.FloatField(default=0.0, min_value=0.0)
    y_offset = serializers.FloatField(default=0.0)

    def validate(self, data):
        try:
            SimConfig(**data)
        except ConfigurationError as exc:
            raise serializers.ValidationError(str(exc))
        return data


class ExtractionParamsSerializer(serializers.Serializer):
    tol_slope_change = serializers.FloatField(default=0.05)
    min_samples = serializers.IntegerField(default=3, min_value=2)
    jump_factor = serializers.FloatField(default=5.0)
    speed_prior = serializers.FloatField(default=1.0)
    eps_max = serializers.FloatField(default=1e-6)
    zero_step_tol = serializers.FloatField(default=0.1)
    endpoint_centering = serializers.BooleanField(default=True)
    slope_method = serializers.ChoiceField(choices=SLOPE_METHODS, default='endpoint')
    lost_policy = serializers.ChoiceField(choices=LOST_POLICIES, default='invalidate')

    def validate(self, data):
        try:
            ExtractionParams(**data)
        except ConfigurationError as exc:
            raise serializers.ValidationError(str(exc))
        return data


class EstimatorParamsSerializer(serializers.Serializer):
    """Every field is optional; missing ones come from settings.SHAPESENSE_ESTIMATOR"""
    s_small = serializers.FloatField(required=False)
    s_large = serializers.FloatField(required=False)
    max_pairs = serializers.IntegerField(required=False, min_value=1)
    eps_l = serializers.FloatField(required=False, min_value=0.0)
    band_low = serializers.FloatField(required=False)
    band_high = serializers.FloatField(required=False)
    k_max = serializers.IntegerField(required=False, min_value=1)
    min_support_abs = serializers.IntegerField(required=False, min_value=1)
    min_support_frac = serializers.FloatField(required=False, min_value=0.0, max_value=1.0)
    n_c_min = serializers.IntegerField(required=False, min_value=1)
    closure_tol = serializers.FloatField(required=False, min_value=0.0)
    max_components = serializers.IntegerField(required=False, min_value=1)
    consistency_method = serializers.ChoiceField(choices=['mu', 'xi'], required=False)
    xi_tol = serializers.FloatField(required=False, min_value=0.0)
    compensate_concave = serializers.BooleanField(required=False)

    def validate(self, data):
        try:
            EstimatorParams.from_settings(**data)
        except ConfigurationError as exc:
            raise serializers.ValidationError(str(exc))
        return data


class ExperimentSpecSerializer(serializers.Serializer):
    """Validates an experiment file or request body and builds an ExperimentSpec"""
    name = serializers.CharField(required=False, allow_blank=True, default='')
    preset = serializers.ChoiceField(choices=list(PRESETS), required=False, allow_null=True)
    target = PolygonSerializer(required=False)
    sim = SimConfigSerializer(required=False)
    extraction = ExtractionParamsSerializer(required=False)
    estimator = EstimatorParamsSerializer(required=False)
    runs = serializers.IntegerField(default=10, min_value=1)
    seed = serializers.IntegerField(required=False, min_value=0)
    sweep = serializers.DictField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=1),
        required=False,
    )

    def validate_sweep(self, value):
        unknown = set(value) - set(SWEEP_AXES)
        if unknown:
            raise serializers.ValidationError(f"Unknown sweep axes: {sorted(unknown)}")
        if 'n_s' in value:
            if any(n < 1 or n != int(n) for n in value['n_s']):
                raise serializers.ValidationError("n_s values must be positive integers")
            value['n_s'] = [int(n) for n in value['n_s']]
        return value

    def validate(self, data):
        if not data.get('preset') and not data.get('target'):
            raise serializers.ValidationError("Either 'preset' or 'target' is required")
        return data

    def create(self, validated_data):
        preset = validated_data.get('preset')
        if preset:
            target = get_preset(preset)
        else:
            target = validated_data['target']['polygon']
        seed = validated_data.get('seed')
        if seed is None:
            seed = settings.SHAPESENSE_DEFAULT_SEED
        try:
            return ExperimentSpec(
                target=target,
                preset=preset,
                name=validated_data.get('name') or preset or 'custom',
                sim=SimConfig(**validated_data.get('sim', {})),
                extraction=ExtractionParams(**validated_data.get('extraction', {})),
                estimator=EstimatorParams.from_settings(**validated_data.get('estimator', {})),
                runs=validated_data['runs'],
                seed=seed,
                sweep={k: tuple(v) for k, v in validated_data.get('sweep', {}).items()},
            )
        except ConfigurationError as exc:
            raise serializers.ValidationError(str(exc))


class DeploymentSerializer(serializers.Serializer):
    omega_width = serializers.FloatField(min_value=0.0)
    omega_height = serializers.FloatField(min_value=0.0)
    n_s = serializers.IntegerField(min_value=1)
    r_max = serializers.FloatField(min_value=0.0)
    dt = serializers.FloatField(default=1.0, min_value=0.0)


class TraceSerializer(serializers.Serializer):
    sensor_id = serializers.IntegerField(min_value=0)
    t0 = serializers.FloatField()
    dt = serializers.FloatField(default=1.0)
    samples = serializers.ListField(child=serializers.JSONField(allow_null=True), min_length=1)

    def validate_samples(self, value):
        for sample in value:
            if sample is None or sample == 'lost' or isinstance(sample, (int, float)) and not isinstance(sample, bool):
                continue
            raise serializers.ValidationError(f"Invalid sample {sample!r}: expected a number, null or 'lost'")
        return value


class EstimateRequestSerializer(serializers.Serializer):
    traces = TraceSerializer(many=True)
    deployment = DeploymentSerializer()
    m_t = serializers.FloatField(required=False, allow_null=True)
    seed = serializers.IntegerField(default=0, min_value=0)
    sigma_s = serializers.FloatField(default=0.0, min_value=0.0)
    extraction = ExtractionParamsSerializer(required=False)

    def to_inputs(self):
        """Traces, deployment and extraction parameters from validated data"""
        data = self.validated_data
        traces = [
            RangeTrace.from_samples(t['sensor_id'], t['t0'], t['dt'], t['samples']) for t in data['traces']
        ]
        return traces, DeploymentInfo(**data['deployment']), ExtractionParams(**data.get('extraction', {}))


class ExperimentRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'run_index', 'seed', 'sweep_point_index', 'sweep_point', 'v_hat', 'm_t', 'n_r',
            'estimate_count', 'edge_count_correct', 'squared_errors', 'flagged',
            'closure_gap_x', 'closure_gap_y', 'shape_complete', 'created_at',
        ]
        read_only_fields = fields


class ExperimentSerializer(serializers.ModelSerializer):
    run_count = serializers.SerializerMethodField()

    class Meta:
        model = Experiment
        fields = [
            'id', 'name', 'preset', 'spec', 'base_seed', 'runs', 'status', 'error_message',
            'mse', 'metrics', 'run_count', 'created_at', 'updated_at',
        ]
        read_only_fields = fields

    def get_run_count(self, obj):
        return obj.run_results.count()


class EstimatorControlsSerializer(serializers.ModelSerializer):
    """Serializer for the estimator settings singleton"""
    class Meta:
        model = EstimatorControls
        fields = ['id'] + list(EstimatorControls.PARAM_FIELDS) + ['created_at', 'updated_at']
        read_only_fields = ['id', 'created_at', 'updated_at']

    def validate(self, data):
        band_low = data.get('band_low', getattr(self.instance, 'band_low', 0.85))
        band_high = data.get('band_high', getattr(self.instance, 'band_high', 1.15))
        if not 0 < band_low <= 1.0 <= band_high:
            raise serializers.ValidationError("Consistency band must bracket 1")
        return data
