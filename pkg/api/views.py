from dataclasses import replace
import logging

from django.http import Http404
from rest_framework import viewsets, permissions, status
from rest_framework.decorators import action
from rest_framework.response import Response

from .models import Experiment, ExperimentRun, EstimatorControls
from .serializers import (
    ExperimentSerializer, ExperimentRunSerializer, ExperimentSpecSerializer,
    EstimatorControlsSerializer, EstimateRequestSerializer,
)
from .services.errors import ConfigurationError, ShapeSenseError
from .services.harness import MetricsReport, persist_report, run_sweep, sweep_metrics
from .services.pipeline import run_estimation
from .services.presets import describe_preset, preset_names

logger = logging.getLogger(__name__)


class ExperimentViewSet(viewsets.ModelViewSet):
    """Create experiments (runs synchronously) and browse their stored runs"""
    serializer_class = ExperimentSerializer
    permission_classes = [permissions.AllowAny]
    http_method_names = ['get', 'post', 'delete', 'head', 'options']

    def get_queryset(self):
        queryset = Experiment.objects.all()
        preset = self.request.query_params.get('preset')
        if preset:
            queryset = queryset.filter(preset=preset)
        experiment_status = self.request.query_params.get('status')
        if experiment_status:
            queryset = queryset.filter(status=experiment_status)
        return queryset

    def create(self, request, *args, **kwargs):
        spec_serializer = ExperimentSpecSerializer(data=request.data)
        if not spec_serializer.is_valid():
            return Response(
                {'error': 'Invalid experiment spec', 'details': spec_serializer.errors},
                status=status.HTTP_400_BAD_REQUEST,
            )
        spec = spec_serializer.save()

        # Estimator values not given in the request come from the stored controls
        try:
            overrides = dict(spec_serializer.validated_data.get('estimator', {}))
            spec = replace(spec, estimator=EstimatorControls.get_current().to_params(**overrides))
        except ConfigurationError as exc:
            return Response({'error': str(exc)}, status=status.HTTP_400_BAD_REQUEST)

        experiment = Experiment.objects.create(
            name=spec.name,
            preset=spec.preset or '',
            spec=spec.to_dict(),
            base_seed=spec.seed,
            runs=spec.runs,
            status=Experiment.STATUS_RUNNING,
        )
        logger.info(f"Experiment {experiment.id} started: {spec.name}, {spec.runs} runs")

        try:
            results = run_sweep(spec)
            stored = persist_report(experiment, results)
        except ConfigurationError as exc:
            self._mark_failed(experiment, exc)
            return Response({'error': str(exc), 'experiment': str(experiment.id)}, status=status.HTTP_400_BAD_REQUEST)
        except ShapeSenseError as exc:
            logger.error(f"Experiment {experiment.id} failed: {exc}")
            self._mark_failed(experiment, exc)
            return Response(self.get_serializer(experiment).data, status=status.HTTP_201_CREATED)
        except Exception as exc:
            logger.error(f"Experiment {experiment.id} crashed: {exc}", exc_info=True)
            self._mark_failed(experiment, exc)
            return Response(
                {'error': 'Experiment failed', 'details': str(exc), 'experiment': str(experiment.id)},
                status=status.HTTP_500_INTERNAL_SERVER_ERROR,
            )

        experiment.status = Experiment.STATUS_COMPLETED
        experiment.mse = results[0].report.mse
        experiment.metrics = sweep_metrics(results)
        experiment.save(update_fields=['status', 'mse', 'metrics', 'updated_at'])
        logger.info(f"Experiment {experiment.id} completed: {stored} runs stored, MSE={experiment.mse:.3f}")

        return Response(self.get_serializer(experiment).data, status=status.HTTP_201_CREATED)

    @staticmethod
    def _mark_failed(experiment, exc):
        experiment.status = Experiment.STATUS_FAILED
        experiment.error_message = str(exc) or exc.__class__.__name__
        experiment.save(update_fields=['status', 'error_message', 'updated_at'])

    @action(detail=True, methods=['get'])
    def runs(self, request, pk=None):
        """Stored runs, optionally restricted to one sweep point with ?point="""
        experiment = self.get_object()
        queryset = experiment.run_results.all()
        point = request.query_params.get('point')
        if point is not None:
            try:
                queryset = queryset.filter(sweep_point_index=int(point))
            except ValueError:
                return Response({'error': 'point must be an integer'}, status=status.HTTP_400_BAD_REQUEST)
        serializer = ExperimentRunSerializer(queryset, many=True)
        return Response(serializer.data)

    @action(detail=True, methods=['get'])
    def metrics(self, request, pk=None):
        """Recompute the metrics of every sweep point from the stored runs"""
        experiment = self.get_object()
        true_lengths = [float(e['lambda']) for e in experiment.spec.get('target', {}).get('edges', [])]
        points = []
        indices = (
            ExperimentRun.objects.filter(experiment=experiment)
            .order_by('sweep_point_index')
            .values_list('sweep_point_index', flat=True)
            .distinct()
        )
        for index in indices:
            records = experiment.run_results.filter(sweep_point_index=index)
            report = MetricsReport.from_run_records(records, true_lengths)
            first = records.first()
            entry = {'index': index, 'values': first.sweep_point if first else {}}
            entry.update(report.to_dict())
            entry['runs'] = records.count()
            points.append(entry)
        return Response({'experiment': str(experiment.id), 'points': points})


class PresetViewSet(viewsets.ViewSet):
    """Named target outlines"""
    permission_classes = [permissions.AllowAny]

    def list(self, request):
        return Response([describe_preset(name) for name in preset_names()])

    def retrieve(self, request, pk=None):
        try:
            return Response(describe_preset(pk))
        except ConfigurationError:
            raise Http404(f"No preset named '{pk}'")


class EstimatorControlsViewSet(viewsets.ModelViewSet):
    """ViewSet for the estimator settings singleton"""
    serializer_class = EstimatorControlsSerializer
    permission_classes = [permissions.AllowAny]

    def get_queryset(self):
        return EstimatorControls.objects.all()

    @action(detail=False, methods=['get'])
    def current(self, request):
        """Get the current estimator settings (creates defaults if none exist)"""
        controls = EstimatorControls.get_current()
        serializer = self.get_serializer(controls)
        return Response(serializer.data)

    def update(self, request, *args, **kwargs):
        if kwargs.get('pk'):
            instance = self.get_object()
        else:
            instance = EstimatorControls.get_current()

        serializer = self.get_serializer(instance, data=request.data, partial=True)
        serializer.is_valid(raise_exception=True)
        serializer.save()

        return Response(serializer.data)


class EstimateViewSet(viewsets.ViewSet):
    """Run the estimator on uploaded range traces"""
    permission_classes = [permissions.AllowAny]

    def create(self, request):
        serializer = EstimateRequestSerializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        traces, deployment, extraction = serializer.to_inputs()
        data = serializer.validated_data

        try:
            result = run_estimation(
                traces,
                deployment,
                m_t=data.get('m_t'),
                extraction=extraction,
                params=EstimatorControls.get_current().to_params(),
                seed=data['seed'],
                sigma_s=data['sigma_s'],
            )
        except ConfigurationError as exc:
            return Response({'error': str(exc)}, status=status.HTTP_400_BAD_REQUEST)
        except ShapeSenseError as exc:
            logger.warning(f"Estimate request produced no result: {exc}")
            return Response({'error': str(exc)}, status=status.HTTP_422_UNPROCESSABLE_ENTITY)

        return Response(result.to_dict())
