from django.db import models


class InstitutionAudit(models.Model):
    """A persisted audit report for one institution"""
    inst_id = models.CharField(max_length=200, db_index=True)
    level = models.CharField(max_length=32)  # no_anomaly, humpback_detected, ...
    score = models.FloatField()
    h_index = models.IntegerField()
    papers = models.IntegerField()
    total_citations = models.IntegerField(default=0)
    schema_version = models.CharField(max_length=10)
    report_json = models.TextField()
    svg = models.TextField(blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        db_table = 'institution_audits'
        ordering = ['-created_at', '-id']

    def __str__(self):
        return f"{self.inst_id}: {self.level} ({self.score:.3f})"

    def summary(self):
        return {
            'id': self.id,
            'inst_id': self.inst_id,
            'level': self.level,
            'score': self.score,
            'h_index': self.h_index,
            'papers': self.papers,
            'total_citations': self.total_citations,
            'schema_version': self.schema_version,
            'created_at': self.created_at.isoformat(),
        }
