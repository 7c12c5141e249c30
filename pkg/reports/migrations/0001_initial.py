# Generated by Django 5.0.1 on 2026-10-17 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="InstitutionAudit",
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
                ("inst_id", models.CharField(db_index=True, max_length=200)),
                ("level", models.CharField(max_length=32)),
                ("score", models.FloatField()),
                ("h_index", models.IntegerField()),
                ("papers", models.IntegerField()),
                ("total_citations", models.IntegerField(default=0)),
                ("schema_version", models.CharField(max_length=10)),
                ("report_json", models.TextField()),
                ("svg", models.TextField(blank=True)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={
                "db_table": "institution_audits",
                "ordering": ["-created_at", "-id"],
            },
        ),
    ]
