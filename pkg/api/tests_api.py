from unittest.mock import patch

from django.test import TestCase, tag
from rest_framework import status
from rest_framework.test import APIClient

from api.models import Experiment, EstimatorControls
from api.services.presets import preset_names

DEPLOYMENT = {'omega_width': 1000.0, 'omega_height': 300.0, 'n_s': 10, 'r_max': 100.0}


class PresetAPITestCase(TestCase):

    def setUp(self):
        self.client = APIClient()

    def test_list_presets(self):
        response = self.client.get('/api/presets/')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual([p['name'] for p in response.data], preset_names())

    def test_retrieve_preset(self):
        response = self.client.get('/api/presets/truck/')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['name'], 'truck')

    def test_unknown_preset_404(self):
        response = self.client.get('/api/presets/nope/')
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)


class ControlsAPITestCase(TestCase):

    def setUp(self):
        self.client = APIClient()

    def test_current_creates_defaults(self):
        response = self.client.get('/api/controls/current/')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(EstimatorControls.objects.count(), 1)
        for name in EstimatorControls.PARAM_FIELDS:
            self.assertIn(name, response.data)

    def test_partial_update(self):
        controls = EstimatorControls.get_current()
        response = self.client.patch(f'/api/controls/{controls.id}/', {'n_c_min': 12}, format='json')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        controls.refresh_from_db()
        self.assertEqual(controls.n_c_min, 12)
        self.assertEqual(controls.to_params().n_c_min, 12)

    def test_band_must_bracket_one(self):
        controls = EstimatorControls.get_current()
        response = self.client.patch(f'/api/controls/{controls.id}/', {'band_low': 1.2}, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)


class EstimateAPITestCase(TestCase):

    def setUp(self):
        self.client = APIClient()

    def test_invalid_sample_rejected(self):
        payload = {
            'traces': [{'sensor_id': 0, 't0': 0.0, 'samples': [None, 'x', 3.0]}],
            'deployment': DEPLOYMENT,
        }
        response = self.client.post('/api/estimate/', payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)

    def test_no_detection_unprocessable(self):
        payload = {
            'traces': [{'sensor_id': 0, 't0': 0.0, 'samples': [None, None, 'lost']}],
            'deployment': DEPLOYMENT,
        }
        response = self.client.post('/api/estimate/', payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_422_UNPROCESSABLE_ENTITY)
        self.assertIn('error', response.data)

    def test_no_edge_estimate_unprocessable(self):
        payload = {
            'traces': [{'sensor_id': 0, 't0': 0.0, 'samples': [None, 40.0, 41.0, 42.0, 43.0, 44.0, None]}],
            'deployment': DEPLOYMENT,
        }
        response = self.client.post('/api/estimate/', payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_422_UNPROCESSABLE_ENTITY)
        self.assertIn('No edge estimate', response.data['error'])


class ExperimentAPITestCase(TestCase):

    def setUp(self):
        self.client = APIClient()

    def test_invalid_spec(self):
        response = self.client.post('/api/experiments/', {'runs': 0}, format='json')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertEqual(Experiment.objects.count(), 0)

    def test_put_not_allowed(self):
        response = self.client.put('/api/experiments/', {}, format='json')
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)

    def test_unexpected_failure_marks_experiment_failed(self):
        payload = {'preset': 'triangle', 'runs': 1}
        with patch('api.views.run_sweep', side_effect=RuntimeError('worker died')):
            response = self.client.post('/api/experiments/', payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_500_INTERNAL_SERVER_ERROR)
        experiment = Experiment.objects.get()
        self.assertEqual(experiment.status, Experiment.STATUS_FAILED)
        self.assertEqual(experiment.error_message, 'worker died')
        self.assertEqual(response.data['experiment'], str(experiment.id))

    @tag('slow')
    def test_small_experiment(self):
        payload = {'preset': 'triangle', 'runs': 1, 'sim': {'n_s': 300, 'omega_width': 1000.0}}
        response = self.client.post('/api/experiments/', payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_201_CREATED)
        experiment = Experiment.objects.get(id=response.data['id'])
        self.assertIn(experiment.status, (Experiment.STATUS_COMPLETED, Experiment.STATUS_FAILED))
        if experiment.status == Experiment.STATUS_COMPLETED:
            runs = self.client.get(f'/api/experiments/{experiment.id}/runs/')
            self.assertEqual(len(runs.data), 1)
            metrics = self.client.get(f'/api/experiments/{experiment.id}/metrics/')
            self.assertEqual(len(metrics.data['points']), 1)
            self.assertEqual(len(metrics.data['points'][0]['rsr_mse']), 3)
