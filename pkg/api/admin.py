from django.contrib import admin
from .models import Experiment, ExperimentRun, EstimatorControls


class ExperimentRunInline(admin.TabularInline):
    model = ExperimentRun
    extra = 0
    can_delete = False
    fields = ['sweep_point_index', 'run_index', 'seed', 'v_hat', 'estimate_count', 'edge_count_correct', 'flagged']
    readonly_fields = fields


@admin.register(Experiment)
class ExperimentAdmin(admin.ModelAdmin):
    list_display = ['name', 'preset', 'status', 'runs', 'base_seed', 'mse', 'created_at']
    list_filter = ['status', 'preset', 'created_at']
    search_fields = ['name', 'preset']
    ordering = ['-created_at']
    readonly_fields = ['id', 'spec', 'metrics', 'created_at', 'updated_at']
    inlines = [ExperimentRunInline]

    actions = ['mark_failed']

    def mark_failed(self, request, queryset):
        updated = queryset.filter(status=Experiment.STATUS_RUNNING).update(
            status=Experiment.STATUS_FAILED, error_message='Marked failed from admin'
        )
        self.message_user(request, f"{updated} experiments marked failed")
    mark_failed.short_description = "Mark stuck experiments as failed"


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ['experiment', 'sweep_point_index', 'run_index', 'v_hat', 'estimate_count', 'edge_count_correct', 'flagged']
    list_filter = ['flagged', 'edge_count_correct', 'shape_complete']
    ordering = ['experiment', 'sweep_point_index', 'run_index']


@admin.register(EstimatorControls)
class EstimatorControlsAdmin(admin.ModelAdmin):
    list_display = ['id', 'band_low', 'band_high', 'n_c_min', 'max_pairs', 'updated_at']
