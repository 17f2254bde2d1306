"""
Scenarios Views
"""
from django.http import JsonResponse
from django.views.decorators.http import require_http_methods
from apps.scenarios.services.scenario_service import MOVING_WATER_PRESETS, SCENARIOS, get_scenario_service
from apps.solver.exceptions import ConfigurationError, SolverError
import logging

logger = logging.getLogger(__name__)


@require_http_methods(["GET"])
def scenario_list(request):
    """All registered scenarios with their run defaults"""
    try:
        scenarios = get_scenario_service().list_scenarios()
        return JsonResponse({
            'success': True,
            'count': len(scenarios),
            'scenarios': scenarios,
        })

    except Exception as e:
        logger.error(f"Failed to list scenarios: {str(e)}")
        return JsonResponse({
            'success': False,
            'error': str(e)
        }, status=500)


@require_http_methods(["GET"])
def scenario_detail(request, name):
    """Run defaults of one scenario; moving_water takes ?preset=, ?m= and ?E="""
    options = {}
    try:
        if name == 'moving_water':
            preset = request.GET.get('preset', '').strip()
            if preset:
                options['preset'] = preset
            for key in ('m', 'E'):
                value = request.GET.get(key, '').strip()
                if value:
                    options[key] = float(value)
    except ValueError:
        return JsonResponse({
            'success': False,
            'error': 'm and E must be numbers'
        }, status=400)

    try:
        scenario = get_scenario_service().get_scenario(name, **options)
        payload = scenario.to_dict()
        if name == 'moving_water':
            payload['presets'] = {key: {'m': m, 'E': E} for key, (m, E) in MOVING_WATER_PRESETS.items()}
        return JsonResponse({
            'success': True,
            'scenario': payload
        })

    except ConfigurationError as e:
        status = 404 if name not in SCENARIOS else 400
        return JsonResponse({
            'success': False,
            'error': str(e)
        }, status=status)
    except SolverError as e:
        logger.error(f"Failed to build scenario {name}: {str(e)}")
        return JsonResponse({
            'success': False,
            'error': str(e)
        }, status=400)
