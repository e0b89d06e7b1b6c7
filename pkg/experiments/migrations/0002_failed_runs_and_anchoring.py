# Generated by Django 4.2.7 on 2026-10-18 14:37

from django.db import migrations, models


class Migration(migrations.Migration):

    dependencies = [
        ('experiments', '0001_initial'),
    ]

    operations = [
        migrations.AddField(
            model_name='experimentrun',
            name='error',
            field=models.TextField(blank=True, help_text='Exception that ended a failed run'),
        ),
        migrations.AddField(
            model_name='metricresult',
            name='anchored',
            field=models.BooleanField(default=True, help_text='False when plain ridge was kept'),
        ),
        migrations.AddField(
            model_name='metricresult',
            name='span_fraction',
            field=models.FloatField(blank=True, help_text='Share of beta_perp in the support span', null=True),
        ),
    ]
