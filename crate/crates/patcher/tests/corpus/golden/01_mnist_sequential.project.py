from finejoule_shim import before_execution as before_execution_INSERTED_INTO_SCRIPT, after_execution as after_execution_INSERTED_INTO_SCRIPT
EXPERIMENT_FILE_PATH = 'experiments/01_mnist_sequential'
start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='01_mnist_sequential')
import tensorflow as tf

mnist = tf.keras.datasets.mnist
(x_train, y_train), (x_test, y_test) = mnist.load_data()  # expect: tensorflow.keras.datasets.mnist.load_data
x_train, x_test = x_train / 255.0, x_test / 255.0

flatten = tf.keras.layers.Flatten(input_shape=(28, 28))  # expect: tensorflow.keras.layers.Flatten
dense = tf.keras.layers.Dense(128, activation="relu")  # expect: tensorflow.keras.layers.Dense
logits = tf.keras.layers.Dense(10)  # expect: tensorflow.keras.layers.Dense
model = tf.keras.models.Sequential([flatten, dense, logits])  # expect: tensorflow.keras.models.Sequential

predictions = model(x_train[:1])  # expect: tensorflow.keras.models.Sequential.__call__

loss_fn = tf.keras.losses.SparseCategoricalCrossentropy(from_logits=True)  # expect: tensorflow.keras.losses.SparseCategoricalCrossentropy
initial = loss_fn(y_train[:1], predictions)  # expect: tensorflow.keras.losses.SparseCategoricalCrossentropy.__call__
print(initial)

model.compile(optimizer="adam", loss=loss_fn, metrics=["accuracy"])  # expect: tensorflow.keras.models.Sequential.compile
history = model.fit(x_train, y_train, epochs=5)  # expect: tensorflow.keras.models.Sequential.fit
print(history.history)

after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='01_mnist_sequential', method_object=None, function_args=None, function_kwargs=None)
