def reward_function(copter_pos, copter_rot, target_pos, copter_angvels, actions):
    # Distance to target
    distance_to_target = np.linalg.norm(copter_pos - target_pos)
    
    # Reward for being close to the target
    reward_close_to_target = 1.0 / (1.0 + distance_to_target)
    
    # Penalty for exceeding height limit or falling below minimum height
    height_penalty = 0
    if copter_pos[2] > 3.0 or copter_pos[2] < 0.8:
        height_penalty = 1.0

    # Reward for maintaining a stable hover
    reward_hover = 1.0 / (1.0 + np.abs(copter_angvels).sum())
    
    # Total reward
    total_reward = reward_close_to_target + reward_hover - height_penalty
    
    return total_reward
