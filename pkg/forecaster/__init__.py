from forecaster.imputation import impute_with_forecast
from forecaster.rnn import RnnParams, init_rnn, rnn_forward, rnn_grad
from forecaster.training import RnnArch, forecast_stream, train_fnn_forecaster, train_rnn
from forecaster.var1 import VarParams, var1_fit, var1_predict
from forecaster.windows import WindowedSeries, make_window_dataset, window_counts
