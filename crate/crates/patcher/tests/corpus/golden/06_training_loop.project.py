from finejoule_shim import before_execution as before_execution_INSERTED_INTO_SCRIPT, after_execution as after_execution_INSERTED_INTO_SCRIPT
EXPERIMENT_FILE_PATH = 'experiments/06_training_loop'
start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='06_training_loop')
import tensorflow as tf

init = tf.ones((3, 1))  # expect: tensorflow.ones
w = tf.Variable(init, name="w")  # expect: tensorflow.Variable
b = tf.Variable(0.0, name="b")  # expect: tensorflow.Variable
x = tf.constant([[1.0, 2.0, 3.0]])  # expect: tensorflow.constant
y_true = tf.constant([[1.0]])  # expect: tensorflow.constant

optimizer = tf.keras.optimizers.SGD(learning_rate=0.1)  # expect: tensorflow.keras.optimizers.SGD
loss_fn = tf.keras.losses.MeanSquaredError()  # expect: tensorflow.keras.losses.MeanSquaredError

tape = tf.GradientTape()  # expect: tensorflow.GradientTape
with tape:
    y_pred = tf.matmul(x, w)  # expect: tensorflow.matmul
    y_pred = y_pred + b
    loss = loss_fn(y_true, y_pred)  # expect: tensorflow.keras.losses.MeanSquaredError.__call__
grads = tape.gradient(loss, [w, b])  # expect: tensorflow.GradientTape.gradient
optimizer.apply_gradients(zip(grads, [w, b]))  # expect: tensorflow.keras.optimizers.SGD.apply_gradients


after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='06_training_loop', method_object=None, function_args=None, function_kwargs=None)
