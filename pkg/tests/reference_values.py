"""Recorded (epsilon, lambda) pairs per dataset and sigma statistic.

Columns are m = 15, m = 30, the third sampled size and m = n, each as an
(epsilon, lambda) pair. The third column is m = 60 for the datasets in
``THIRD_COLUMN_60`` and m = 45 elsewhere (inferred from the values
themselves, see test_theory).
"""

THIRD_COLUMN_60 = ("Cifar", "Sun", "Gist", "Trevi")

REFERENCE_ROWS = [
    ('Cifar', 'max', [0.567575, 2.527575, 0.2876, 1.2876, 0.114125, 0.618225, 6.4e-05, 0.067664]),
    ('Cifar', 'mean', [0.102716, 0.575372, 0.027539, 0.277239, 0.001994, 0.120123, 0.0, 0.014617]),
    ('Cifar', 'min', [0.019616, 0.239671, 0.001702, 0.116014, 1.1e-05, 0.055001, 0.0, 0.006691]),
    ('Sun', 'max', [0.50236, 2.21846, 0.236626, 1.084867, 0.095099, 0.546683, 6e-06, 0.051535]),
    ('Sun', 'mean', [0.022783, 0.255107, 0.001849, 0.11813, 1.8e-05, 0.058099, 0.0, 0.006724]),
    ('Sun', 'min', [0.0, 0.040401, 0.0, 0.020736, 0.0, 0.01, 0.0, 0.001156]),
    ('Gist', 'max', [0.63364, 2.85374, 0.274502, 1.234902, 0.12994, 0.67754, 0.0, 0.0324]),
    ('Gist', 'mean', [0.042122, 0.340238, 0.005183, 0.152639, 0.000133, 0.074662, 0.0, 0.004624]),
    ('Gist', 'min', [6.4e-05, 0.067664, 0.0, 0.038025, 0.0, 0.016926, 0.0, 0.001089]),
    ('Trevi', 'max', [0.01342, 0.20702, 0.001105, 0.106081, 3e-06, 0.049287, 0.0, 0.000729]),
    ('Trevi', 'mean', [1.1e-05, 0.055236, 0.0, 0.029241, 0.0, 0.013924, 0.0, 0.000196]),
    ('Trevi', 'min', [0.0, 0.015876, 0.0, 0.0081, 0.0, 0.003969, 0.0, 0.0001]),
    ('Audio', 'max', [0.268, 1.2089, 0.099004, 0.561404, 0.04352, 0.34602, 3.3e-05, 0.062533]),
    ('Audio', 'mean', [0.033344, 0.303017, 0.003637, 0.138767, 0.00048, 0.091021, 0.0, 0.020967]),
    ('Audio', 'min', [2.2e-05, 0.059705, 0.0, 0.030765, 0.0, 0.021874, 0.0, 0.005329]),
    ('Notre', 'max', [0.341109, 1.507509, 0.143598, 0.728823, 0.074226, 0.467355, 0.004017, 0.142401]),
    ('Notre', 'mean', [0.022783, 0.255107, 0.001902, 0.118866, 0.000172, 0.077456, 0.0, 0.027225]),
    ('Notre', 'min', [0.000101, 0.071925, 0.0, 0.036481, 0.0, 0.023716, 0.0, 0.008281]),
    ('Glove', 'max', [0.26153, 1.18313, 0.094131, 0.543031, 0.040065, 0.331665, 0.002362, 0.124862]),
    ('Glove', 'mean', [0.00319, 0.134234, 4.7e-05, 0.065072, 1e-06, 0.043265, 0.0, 0.019853]),
    ('Glove', 'min', [2.5e-05, 0.060541, 0.0, 0.029929, 0.0, 0.020335, 0.0, 0.009409]),
    ('Sift', 'max', [0.294194, 1.314294, 0.098513, 0.559554, 0.057014, 0.40041, 0.001296, 0.109537]),
    ('Sift', 'mean', [0.054265, 0.389506, 0.007185, 0.167986, 0.001509, 0.113065, 0.0, 0.036864]),
    ('Sift', 'min', [0.003755, 0.139916, 0.000107, 0.072468, 1e-06, 0.04537, 0.0, 0.016129]),
    ('Deep', 'max', [0.036744, 0.317644, 0.003841, 0.140741, 0.000463, 0.090463, 0.0, 0.0144]),
    ('Deep', 'mean', [0.003047, 0.132719, 4.4e-05, 0.06456, 1e-06, 0.043306, 0.0, 0.007569]),
    ('Deep', 'min', [0.000199, 0.07916, 0.0, 0.039204, 0.0, 0.026374, 0.0, 0.004638]),
    ('Random', 'max', [0.077344, 0.4793, 0.015195, 0.216796, 0.003505, 0.137461, 4.1e-05, 0.06405]),
    ('Random', 'mean', [0.002824, 0.130273, 3.8e-05, 0.063542, 1e-06, 0.042437, 0.0, 0.019044]),
    ('Random', 'min', [2.4e-05, 0.060049, 0.0, 0.029929, 0.0, 0.019881, 0.0, 0.008649]),
    ('Ukbench', 'max', [0.692955, 3.157855, 0.361581, 1.593681, 0.217238, 1.009338, 0.039727, 0.330248]),
    ('Ukbench', 'mean', [0.139183, 0.712232, 0.034502, 0.308031, 0.012672, 0.202768, 5.6e-05, 0.06662]),
    ('Ukbench', 'min', [0.002895, 0.131059, 4.1e-05, 0.06405, 1e-06, 0.042437, 0.0, 0.015376]),
    ('ImageNet', 'max', [0.466568, 2.054168, 0.217238, 1.009338, 0.119323, 0.637723, 0.004773, 0.149173]),
    ('ImageNet', 'mean', [0.019125, 0.237214, 0.001336, 0.110236, 0.000107, 0.072468, 0.0, 0.022201]),
    ('ImageNet', 'min', [0.0, 0.033489, 0.0, 0.016641, 0.0, 0.011025, 0.0, 0.003481]),
]
