from finejoule_shim import before_execution as before_execution_INSERTED_INTO_SCRIPT, after_execution as after_execution_INSERTED_INTO_SCRIPT
EXPERIMENT_FILE_PATH = 'experiments/04_custom_layer'
import tensorflow as tf
from tensorflow.keras import layers


class Linear(layers.Layer):
    def __init__(self, units=32):
        super().__init__()
        self.units = units

    def build(self, input_shape):
        start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.add_weight')
        self.w = self.add_weight(shape=(input_shape[-1], self.units), initializer="random_normal", trainable=True)  # expect: tensorflow.keras.layers.Layer.add_weight
        after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.add_weight', method_object=self, function_args=[], function_kwargs={'shape': (input_shape[-1], self.units), 'initializer': "random_normal", 'trainable': True})
        start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.add_weight')
        self.b = self.add_weight(shape=(self.units,), initializer="zeros", trainable=True)  # expect: tensorflow.keras.layers.Layer.add_weight
        after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.add_weight', method_object=self, function_args=[], function_kwargs={'shape': (self.units,), 'initializer': "zeros", 'trainable': True})

    def call(self, inputs):
        start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.matmul')
        y = tf.matmul(inputs, self.w)  # expect: tensorflow.matmul
        after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.matmul', method_object=None, function_args=[inputs, self.w], function_kwargs={})
        y = y + self.b
        return y


class Block(layers.Layer):
    def __init__(self):
        super().__init__()
        self.linear_1 = Linear(32)
        self.linear_2 = Linear(1)

    def call(self, inputs):
        start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.__call__')
        x = self.linear_1(inputs)  # expect: tensorflow.keras.layers.Layer.__call__
        after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.__call__', method_object=self.linear_1, function_args=[inputs], function_kwargs={})
        start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.nn.relu')
        x = tf.nn.relu(x)  # expect: tensorflow.nn.relu
        after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.nn.relu', method_object=None, function_args=[None], function_kwargs={})
        start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.__call__')
        y = self.linear_2(x)  # expect: tensorflow.keras.layers.Layer.__call__
        after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.__call__', method_object=self.linear_2, function_args=[x], function_kwargs={})
        return y


start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.ones')
x = tf.ones((2, 2))  # expect: tensorflow.ones
after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.ones', method_object=None, function_args=[(2, 2)], function_kwargs={})
linear_layer = Linear(4)
start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.__call__')
y = linear_layer(x)  # expect: tensorflow.keras.layers.Layer.__call__
after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.__call__', method_object=linear_layer, function_args=[x], function_kwargs={})
print(y)

block = Block()
start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.__call__')
out = block(x)  # expect: tensorflow.keras.layers.Layer.__call__
after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='tensorflow.keras.layers.Layer.__call__', method_object=block, function_args=[x], function_kwargs={})
print(len(block.weights))
