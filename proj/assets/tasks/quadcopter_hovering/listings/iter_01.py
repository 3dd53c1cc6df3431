def reward_function(copter_pos, copter_rot, target_pos, copter_angvels, actions):
 def reward_function(copter_pos, copter_rot, target_pos, copter_angvels, actions):
    # Constants
    Z_UPPER_LIMIT = 3.0
    Z_LOWER_LIMIT = 0.8
    HOVER_BONUS = 1.0
    POSITION_REWARD_SCALE = 2.0  # Increase the weight for position reward
    ANGVEL_REWARD_SCALE = 0.1
    ACTION_REWARD_SCALE = 0.5  # Increase the weight for action reward

    # Calculate distance to target
    distance_to_target = np.linalg.norm(target_pos - copter_pos)

    # Calculate reward for being close to target position
    position_reward = POSITION_REWARD_SCALE / (1 + distance_to_target)

    # Calculate reward for low angular velocity
    angvel_reward = ANGVEL_REWARD_SCALE / (1 + np.linalg.norm(copter_angvels))

    # Calculate reward for small actions
    action_reward = ACTION_REWARD_SCALE / (1 + np.linalg.norm(actions))

    # Check if copter is hovering at target position
    hover_reward = 0.0
    if distance_to_target < 0.1 and Z_LOWER_LIMIT <= copter_pos[2] <= Z_UPPER_LIMIT:
        hover_reward = HOVER_BONUS

    # Calculate total reward
    total_reward = position_reward + angvel_reward + action_reward + hover_reward

    return total_reward
