# -*- coding: utf-8 -*-

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='FittedGauge',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('seed', models.IntegerField(verbose_name='Seed')),
                ('data_digest', models.CharField(db_index=True, max_length=64, verbose_name='Data digest')),
                ('dimension', models.PositiveIntegerField(verbose_name='Dimension')),
                ('n_obs', models.PositiveIntegerField(verbose_name='Observations')),
                ('tau', models.FloatField(verbose_name='Quantile level')),
                ('threshold_arch', models.CharField(max_length=100, verbose_name='Threshold architecture')),
                ('gauge_arch', models.CharField(max_length=100, verbose_name='Gauge architecture')),
                ('alpha', models.FloatField(blank=True, null=True, verbose_name='Shape')),
                ('exceedances', models.PositiveIntegerField(default=0, verbose_name='Exceedances')),
                ('gauge_validation_loss', models.FloatField(blank=True, null=True, verbose_name='Gauge validation loss')),
                ('status', models.CharField(choices=[('running', 'Running'), ('finished', 'Finished'), ('failed', 'Failed')], default='running', max_length=20, verbose_name='Status')),
                ('created', models.DateTimeField(auto_now_add=True, verbose_name='Created')),
                ('bundle', models.TextField(default='{}')),
                ('message', models.TextField(blank=True, default='')),
            ],
        ),
        migrations.CreateModel(
            name='StudyCell',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('study', models.CharField(db_index=True, max_length=100, verbose_name='Study')),
                ('copula', models.CharField(max_length=20, verbose_name='Copula')),
                ('dimension', models.PositiveIntegerField(verbose_name='Dimension')),
                ('n_obs', models.PositiveIntegerField(verbose_name='Observations')),
                ('tau', models.FloatField(verbose_name='Quantile level')),
                ('gauge_arch', models.CharField(max_length=100, verbose_name='Gauge architecture')),
                ('created', models.DateTimeField(auto_now_add=True, verbose_name='Created')),
            ],
        ),
        migrations.CreateModel(
            name='TrainingEpoch',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('stage', models.CharField(max_length=20, verbose_name='Stage')),
                ('epoch', models.PositiveIntegerField(verbose_name='Epoch')),
                ('train_loss', models.FloatField(verbose_name='Training loss')),
                ('validation_loss', models.FloatField(verbose_name='Validation loss')),
                ('fit', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='epochs', to='deepgauge.fittedgauge')),
            ],
            options={
                'ordering': ('fit', 'id'),
            },
        ),
        migrations.CreateModel(
            name='SuspectedFit',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('reason', models.TextField(verbose_name='Reason')),
                ('created', models.DateTimeField(auto_now_add=True)),
                ('fit', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='suspects', to='deepgauge.fittedgauge')),
            ],
        ),
        migrations.CreateModel(
            name='StudyReplicate',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('replicate', models.PositiveIntegerField(verbose_name='Replicate')),
                ('seed', models.BigIntegerField(verbose_name='Seed')),
                ('ise', models.FloatField(blank=True, null=True, verbose_name='ISE')),
                ('male', models.FloatField(blank=True, null=True, verbose_name='MALE')),
                ('status', models.CharField(choices=[('finished', 'Finished'), ('failed', 'Failed')], default='finished', max_length=20, verbose_name='Status')),
                ('error', models.TextField(blank=True, default='')),
                ('cell', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='replicates', to='deepgauge.studycell')),
            ],
            options={
                'ordering': ('cell', 'replicate'),
            },
        ),
    ]
