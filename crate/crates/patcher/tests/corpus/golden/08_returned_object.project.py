from finejoule_shim import before_execution as before_execution_INSERTED_INTO_SCRIPT, after_execution as after_execution_INSERTED_INTO_SCRIPT
EXPERIMENT_FILE_PATH = 'experiments/08_returned_object'
start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='08_returned_object')
import tensorflow as tf


def build_model(units):
    model = tf.keras.Sequential()  # expect: tensorflow.keras.Sequential
    layer = tf.keras.layers.Dense(units)  # expect: tensorflow.keras.layers.Dense
    model.add(layer)  # expect: tensorflow.keras.Sequential.add
    model.compile(optimizer="adam", loss="mse")  # expect: tensorflow.keras.Sequential.compile
    return model


def make_data(rows):
    xs = tf.random.normal((rows, 3))  # expect: tensorflow.random.normal
    ys = tf.random.normal((rows, units_out))  # expect: tensorflow.random.normal
    return xs, ys


units_out = 2
model = build_model(units_out)
xs, ys = make_data(16)
model.fit(xs, ys, epochs=1)  # miss: returned-object
print("trained")
after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='08_returned_object', method_object=None, function_args=None, function_kwargs=None)
