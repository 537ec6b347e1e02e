# Generated by Django 5.2.4 on 2026-10-17 09:12

import django.core.validators
import django.db.models.deletion
import uuid
from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="EstimatorControls",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                (
                    "s_small",
                    models.FloatField(
                        default=0.3,
                        validators=[django.core.validators.MinValueValidator(0.0)],
                    ),
                ),
                (
                    "s_large",
                    models.FloatField(
                        default=3.0,
                        validators=[django.core.validators.MinValueValidator(0.0)],
                    ),
                ),
                ("max_pairs", models.PositiveIntegerField(default=5000)),
                (
                    "eps_l",
                    models.FloatField(
                        default=0.05,
                        validators=[
                            django.core.validators.MinValueValidator(0.0),
                            django.core.validators.MaxValueValidator(1.0),
                        ],
                    ),
                ),
                (
                    "band_low",
                    models.FloatField(
                        default=0.85, help_text="Lower factor of the consistency band"
                    ),
                ),
                (
                    "band_high",
                    models.FloatField(
                        default=1.15, help_text="Upper factor of the consistency band"
                    ),
                ),
                ("k_max", models.PositiveIntegerField(default=16)),
                ("min_support_abs", models.PositiveIntegerField(default=10)),
                (
                    "min_support_frac",
                    models.FloatField(
                        default=0.01,
                        validators=[
                            django.core.validators.MinValueValidator(0.0),
                            django.core.validators.MaxValueValidator(1.0),
                        ],
                    ),
                ),
                (
                    "n_c_min",
                    models.PositiveIntegerField(
                        default=30,
                        help_text="Consecutive detections needed to link two edges",
                    ),
                ),
                ("closure_tol", models.FloatField(default=0.05)),
                ("max_components", models.PositiveIntegerField(default=6)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("updated_at", models.DateTimeField(auto_now=True)),
            ],
            options={
                "verbose_name": "Estimator Settings",
                "verbose_name_plural": "Estimator Settings",
            },
        ),
        migrations.CreateModel(
            name="Experiment",
            fields=[
                (
                    "id",
                    models.UUIDField(
                        default=uuid.uuid4,
                        editable=False,
                        primary_key=True,
                        serialize=False,
                    ),
                ),
                ("name", models.CharField(blank=True, max_length=100)),
                ("preset", models.CharField(blank=True, db_index=True, max_length=50)),
                (
                    "spec",
                    models.JSONField(
                        default=dict,
                        help_text="Experiment spec as submitted (target, sim, estimator, sweep)",
                    ),
                ),
                ("base_seed", models.BigIntegerField(default=20240917)),
                (
                    "runs",
                    models.PositiveIntegerField(
                        default=10,
                        validators=[django.core.validators.MinValueValidator(1)],
                    ),
                ),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("pending", "Pending"),
                            ("running", "Running"),
                            ("completed", "Completed"),
                            ("failed", "Failed"),
                        ],
                        db_index=True,
                        default="pending",
                        max_length=20,
                    ),
                ),
                ("error_message", models.TextField(blank=True)),
                ("mse", models.FloatField(blank=True, null=True)),
                (
                    "metrics",
                    models.JSONField(
                        blank=True,
                        default=dict,
                        help_text="Aggregated metrics per sweep point",
                    ),
                ),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                ("updated_at", models.DateTimeField(auto_now=True)),
            ],
            options={
                "ordering": ["-created_at"],
            },
        ),
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("run_index", models.PositiveIntegerField()),
                ("seed", models.BigIntegerField()),
                ("sweep_point_index", models.PositiveIntegerField(default=0)),
                ("sweep_point", models.JSONField(blank=True, default=dict)),
                ("v_hat", models.FloatField(blank=True, null=True)),
                ("m_t", models.FloatField(default=0.0)),
                ("n_r", models.PositiveIntegerField(default=0)),
                ("estimate_count", models.PositiveIntegerField(default=0)),
                ("edge_count_correct", models.BooleanField(default=False)),
                (
                    "squared_errors",
                    models.JSONField(
                        default=list, help_text="Squared error per true edge"
                    ),
                ),
                ("flagged", models.BooleanField(default=False)),
                ("closure_gap_x", models.FloatField(blank=True, null=True)),
                ("closure_gap_y", models.FloatField(blank=True, null=True)),
                ("shape_complete", models.BooleanField(default=False)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                (
                    "experiment",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="run_results",
                        to="api.experiment",
                    ),
                ),
            ],
            options={
                "ordering": ["sweep_point_index", "run_index"],
                "unique_together": {("experiment", "sweep_point_index", "run_index")},
            },
        ),
    ]
