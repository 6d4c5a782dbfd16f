from finejoule_shim import before_execution as before_execution_INSERTED_INTO_SCRIPT, after_execution as after_execution_INSERTED_INTO_SCRIPT
EXPERIMENT_FILE_PATH = 'experiments/10_callbacks'
start_times_INSERTED_INTO_SCRIPT = before_execution_INSERTED_INTO_SCRIPT(experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='10_callbacks')
import tensorflow as tf
from tensorflow.keras.callbacks import EarlyStopping, ModelCheckpoint

(x_train, y_train), _ = tf.keras.datasets.fashion_mnist.load_data()  # expect: tensorflow.keras.datasets.fashion_mnist.load_data
normalizer = tf.keras.layers.Normalization()  # expect: tensorflow.keras.layers.Normalization
normalizer.adapt(x_train)  # expect: tensorflow.keras.layers.Normalization.adapt
model = tf.keras.Sequential([normalizer])  # expect: tensorflow.keras.Sequential
dense = tf.keras.layers.Dense(10)  # expect: tensorflow.keras.layers.Dense
model.add(dense)  # expect: tensorflow.keras.Sequential.add

early = EarlyStopping(monitor="loss", patience=2)  # expect: tensorflow.keras.callbacks.EarlyStopping
checkpoint = ModelCheckpoint("weights.keras", save_best_only=True)  # expect: tensorflow.keras.callbacks.ModelCheckpoint
callbacks = [early, checkpoint]

model.compile(optimizer="adam", loss="sparse_categorical_crossentropy", metrics=["accuracy"])  # expect: tensorflow.keras.Sequential.compile
history = model.fit(  # expect: tensorflow.keras.Sequential.fit
    x_train,
    y_train,
    epochs=3,
    validation_split=0.1,
    callbacks=callbacks,
)
print(history.params)
model.save_weights("final.weights.h5")  # expect: tensorflow.keras.Sequential.save_weights
after_execution_INSERTED_INTO_SCRIPT(start_times=start_times_INSERTED_INTO_SCRIPT, experiment_file_path=EXPERIMENT_FILE_PATH, function_to_run='10_callbacks', method_object=None, function_args=None, function_kwargs=None)
