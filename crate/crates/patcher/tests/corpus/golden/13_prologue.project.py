#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Train a tiny regression model.

The header must land after this docstring.
"""
from __future__ import annotations
from finejoule_shim import before_execution as before_execution_INSERTED_INTO_SCRIPT, after_execution as after_execution_INSERTED_INTO_SCRIPT
EXPERIMENT_FILE_PATH = 'experiments/13_prologue'
start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='13_prologue')

import tensorflow as tf

model = tf.keras.Sequential()  # expect: tensorflow.keras.Sequential
layer = tf.keras.layers.Dense(1)  # expect: tensorflow.keras.layers.Dense
model.add(layer)  # expect: tensorflow.keras.Sequential.add
model.compile(loss="mse")  # expect: tensorflow.keras.Sequential.compile
xs = tf.linspace(0.0, 1.0, 8)  # expect: tensorflow.linspace
ys = tf.multiply(xs, 2.0)  # expect: tensorflow.multiply
model.fit(xs, ys, epochs=1, verbose=0)  # expect: tensorflow.keras.Sequential.fit
after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='13_prologue', method_object=None, function_args=None, function_kwargs=None)
