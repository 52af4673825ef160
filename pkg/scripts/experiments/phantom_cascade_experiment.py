from pathlib import Path

from nodule_cascade.cli import configure_logging
from nodule_cascade.phantom import PhantomSpec
from nodule_cascade.script_helpers import ExperimentOpts, phantom_experiment_main
from nodule_cascade.training import TrainConfig

if __name__ == '__main__':
    configure_logging()
    opts = ExperimentOpts(spec=PhantomSpec(seed=0),
                          seg_train=TrainConfig(epochs=10),
                          cls_train=TrainConfig(epochs=30))
    result = phantom_experiment_main(opts, out_dir=Path('phantom_cascade_results'))

    frame = result.comparison.to_frame()
    print(frame.to_string(index=False, na_rep='undefined'))
    print(f'pixel auc: {result.pixel_roc.auc:.4f}')
    print(f'case accuracy ({frame.network[0]}): {result.case_accuracy}')

    accuracy = dict(zip(frame.network, frame.accuracy))
    assert result.pixel_roc.auc >= 0.90, 'screening network under 0.90 pixel AUC'
    assert (result.case_accuracy or 0.) >= 0.90, 'cascade under 0.90 case accuracy'
    assert accuracy['cascade_cls'] > accuracy['baseline_fc'], 'proposed classifier does not beat the dense baseline'
