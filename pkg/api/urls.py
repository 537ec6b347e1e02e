from django.urls import path, include
from rest_framework.routers import DefaultRouter
from .views import ExperimentViewSet, PresetViewSet, EstimatorControlsViewSet, EstimateViewSet

router = DefaultRouter()
router.register(r'experiments', ExperimentViewSet, basename='experiment')
router.register(r'presets', PresetViewSet, basename='preset')
router.register(r'controls', EstimatorControlsViewSet, basename='controls')
router.register(r'estimate', EstimateViewSet, basename='estimate')

urlpatterns = [
    path('', include(router.urls)),
]
