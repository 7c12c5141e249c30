from django.test import TestCase
from django.urls import reverse

from analytics.config import AuditConfig
from analytics.tests import corpus_from_counts, plateau_counts, power_law_counts
from reports.audit import audit_institution, save_audit


class AuditEndpointTests(TestCase):
    @classmethod
    def setUpTestData(cls):
        config = AuditConfig()
        cls.flagged = save_audit(audit_institution(corpus_from_counts(plateau_counts(), inst='U1'), 'U1', config))
        cls.smooth = save_audit(
            audit_institution(corpus_from_counts(power_law_counts(400, 3000.0, 1.1), inst='U2'), 'U2', config)
        )

    def test_audit_list(self):
        response = self.client.get(reverse('api_audits'))
        self.assertEqual(response.status_code, 200)
        data = response.json()
        self.assertEqual(data['count'], 2)
        self.assertEqual({a['inst_id'] for a in data['audits']}, {'U1', 'U2'})

    def test_audit_list_filters(self):
        data = self.client.get(reverse('api_audits'), {'level': 'humpback_detected'}).json()
        self.assertEqual([a['inst_id'] for a in data['audits']], ['U1'])
        data = self.client.get(reverse('api_audits'), {'inst_id': 'U2', 'limit': '1'}).json()
        self.assertEqual(data['audits'][0]['level'], 'no_anomaly')

    def test_bad_limit(self):
        response = self.client.get(reverse('api_audits'), {'limit': 'many'})
        self.assertEqual(response.status_code, 400)

    def test_audit_detail(self):
        response = self.client.get(reverse('api_audit_detail', args=[self.flagged.id]))
        self.assertEqual(response.status_code, 200)
        report = response.json()['report']
        self.assertEqual(report['inst_id'], 'U1')
        self.assertEqual(report['metrics']['h_index'], 46)
        self.assertIsNotNone(report['verdict']['hump'])

    def test_missing_audit(self):
        self.assertEqual(self.client.get(reverse('api_audit_detail', args=[9999])).status_code, 404)
        self.assertEqual(self.client.get(reverse('audit_curve_svg', args=[9999])).status_code, 404)

    def test_curve_svg(self):
        response = self.client.get(reverse('audit_curve_svg', args=[self.smooth.id]))
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response['Content-Type'], 'image/svg+xml')
        self.assertIn(b'<svg version="1.1"', response.content)

    def test_stats(self):
        data = self.client.get(reverse('api_stats')).json()
        self.assertEqual(data['total_audits'], 2)
        self.assertEqual(data['institutions'], 2)
        self.assertEqual(data['levels'], {'humpback_detected': 1, 'no_anomaly': 1})

    def test_read_only(self):
        response = self.client.post(reverse('api_audits'))
        self.assertEqual(response.status_code, 405)
