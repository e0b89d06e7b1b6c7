# Generated by Django 4.2.7 on 2026-10-18 09:12

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('digest', models.CharField(db_index=True, help_text='Configuration digest', max_length=32)),
                ('kind', models.CharField(choices=[('experiment', 'Few-shot experiment'), ('similarity', 'Similarity study')], default='experiment', max_length=20)),
                ('dataset', models.CharField(blank=True, help_text='Dataset preset name', max_length=50)),
                ('max_size', models.PositiveSmallIntegerField(help_text='Maximum graphlet size')),
                ('config', models.JSONField(default=dict, help_text='Resolved experiment configuration')),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('failed', 'Failed')], default='completed', max_length=20)),
                ('code_version', models.CharField(blank=True, max_length=20)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('n_tasks', models.PositiveIntegerField(default=0)),
                ('n_skipped', models.PositiveIntegerField(default=0, help_text='Cells skipped for too few rows')),
                ('started_at', models.DateTimeField()),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
                ('elapsed_seconds', models.FloatField(default=0.0)),
                ('pearson', models.FloatField(blank=True, help_text='Similarity study correlation', null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Experiment Run',
                'verbose_name_plural': 'Experiment Runs',
                'ordering': ['-started_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='MetricResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('target', models.CharField(db_index=True, max_length=100)),
                ('n_shots', models.PositiveIntegerField()),
                ('seed', models.PositiveIntegerField()),
                ('support_subsample', models.PositiveIntegerField(default=0, help_text='0 means all support rows')),
                ('max_size', models.PositiveSmallIntegerField()),
                ('n_test', models.PositiveIntegerField(default=0)),
                ('n_support', models.PositiveIntegerField(default=0)),
                ('mae_meta', models.FloatField()),
                ('mae_regular', models.FloatField()),
                ('r2_meta', models.FloatField(blank=True, null=True)),
                ('r2_regular', models.FloatField(blank=True, null=True)),
                ('relative_improvement', models.FloatField(blank=True, null=True)),
                ('lambda_parallel', models.FloatField(default=0.0)),
                ('lambda_perp', models.FloatField(default=0.0)),
                ('lambda_regular', models.FloatField(default=0.0)),
                ('degenerate', models.BooleanField(default=False)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='metrics', to='experiments.experimentrun')),
            ],
            options={
                'verbose_name': 'Metric Result',
                'verbose_name_plural': 'Metric Results',
                'ordering': ['run', 'target', 'max_size', 'support_subsample', 'n_shots', 'seed'],
            },
        ),
        migrations.AddConstraint(
            model_name='metricresult',
            constraint=models.UniqueConstraint(fields=('run', 'target', 'support_subsample', 'n_shots', 'seed'), name='unique_metric_cell'),
        ),
    ]
