from django.db import models
from django.core.validators import MinValueValidator, MaxValueValidator
import uuid


class Experiment(models.Model):
    """A batch of simulation runs for one target and parameter set"""

    STATUS_PENDING = 'pending'
    STATUS_RUNNING = 'running'
    STATUS_COMPLETED = 'completed'
    STATUS_FAILED = 'failed'

    STATUS_CHOICES = [
        (STATUS_PENDING, 'Pending'),
        (STATUS_RUNNING, 'Running'),
        (STATUS_COMPLETED, 'Completed'),
        (STATUS_FAILED, 'Failed'),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    name = models.CharField(max_length=100, blank=True)
    preset = models.CharField(max_length=50, blank=True, db_index=True)
    spec = models.JSONField(default=dict, help_text="Experiment spec as submitted (target, sim, estimator, sweep)")
    base_seed = models.BigIntegerField(default=20240917)
    runs = models.PositiveIntegerField(default=10, validators=[MinValueValidator(1)])
    status = models.CharField(
        max_length=20,
        choices=STATUS_CHOICES,
        default=STATUS_PENDING,
        db_index=True
    )
    error_message = models.TextField(blank=True)
    mse = models.FloatField(null=True, blank=True)
    metrics = models.JSONField(default=dict, blank=True, help_text="Aggregated metrics per sweep point")
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"Experiment({self.name or self.preset or self.id}, status={self.status})"


class ExperimentRun(models.Model):
    """Outcome of one seeded run; enough to recompute the experiment metrics"""
    experiment = models.ForeignKey(Experiment, on_delete=models.CASCADE, related_name='run_results')
    run_index = models.PositiveIntegerField()
    seed = models.BigIntegerField()
    sweep_point_index = models.PositiveIntegerField(default=0)
    sweep_point = models.JSONField(default=dict, blank=True)
    v_hat = models.FloatField(null=True, blank=True)
    m_t = models.FloatField(default=0.0)
    n_r = models.PositiveIntegerField(default=0)
    estimate_count = models.PositiveIntegerField(default=0)
    edge_count_correct = models.BooleanField(default=False)
    squared_errors = models.JSONField(default=list, help_text="Squared error per true edge")
    flagged = models.BooleanField(default=False)
    closure_gap_x = models.FloatField(null=True, blank=True)
    closure_gap_y = models.FloatField(null=True, blank=True)
    shape_complete = models.BooleanField(default=False)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['sweep_point_index', 'run_index']
        unique_together = ['experiment', 'sweep_point_index', 'run_index']

    def __str__(self):
        return f"Run {self.run_index} of {self.experiment_id} (point {self.sweep_point_index})"


class EstimatorControls(models.Model):
    """Estimator tunables used by experiments started through the API"""
    s_small = models.FloatField(default=0.3, validators=[MinValueValidator(0.0)])
    s_large = models.FloatField(default=3.0, validators=[MinValueValidator(0.0)])
    max_pairs = models.PositiveIntegerField(default=5000)
    eps_l = models.FloatField(default=0.05, validators=[MinValueValidator(0.0), MaxValueValidator(1.0)])
    band_low = models.FloatField(default=0.85, help_text="Lower factor of the consistency band")
    band_high = models.FloatField(default=1.15, help_text="Upper factor of the consistency band")
    k_max = models.PositiveIntegerField(default=16)
    min_support_abs = models.PositiveIntegerField(default=10)
    min_support_frac = models.FloatField(default=0.01, validators=[MinValueValidator(0.0), MaxValueValidator(1.0)])
    n_c_min = models.PositiveIntegerField(default=30, help_text="Consecutive detections needed to link two edges")
    closure_tol = models.FloatField(default=0.05)
    max_components = models.PositiveIntegerField(default=6)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    PARAM_FIELDS = (
        's_small', 's_large', 'max_pairs', 'eps_l', 'band_low', 'band_high', 'k_max',
        'min_support_abs', 'min_support_frac', 'n_c_min', 'closure_tol', 'max_components',
    )

    class Meta:
        verbose_name = 'Estimator Settings'
        verbose_name_plural = 'Estimator Settings'

    def __str__(self):
        return f"EstimatorControls (band=[{self.band_low}, {self.band_high}], n_c_min={self.n_c_min})"

    @classmethod
    def get_current(cls):
        """Get the current estimator settings, creating defaults from settings if none exist"""
        from django.conf import settings

        defaults = {k: v for k, v in settings.SHAPESENSE_ESTIMATOR.items() if k in cls.PARAM_FIELDS}
        controls, created = cls.objects.get_or_create(id=1, defaults=defaults)
        return controls

    def to_params(self, **overrides):
        from .services.estimator import EstimatorParams

        values = {name: getattr(self, name) for name in self.PARAM_FIELDS}
        values.update(overrides)
        return EstimatorParams(**values)
