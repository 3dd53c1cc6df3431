def reward_function(robot_pos, robot_rot, robot_linvel, robot_angvel, actions, target_pos):
    # Constants
    alpha = 5.0  # Further increased weight for distance reward
    beta = 0.1
    gamma = 0.5
    delta = 0.001
    epsilon = 0.1  # Increased weight for action reward

    # Distance to target
    distance_to_target = np.linalg.norm(robot_pos[:2] - target_pos[:2])
    reward_distance = alpha * (1.0 / (1.0 + distance_to_target))

    # Stability reward
    reward_stability = beta * (1.0 if robot_pos[2] >= 0.5 else 0.0)

    # Velocity reward
    reward_velocity = gamma * (1.0 / (1.0 + np.linalg.norm(robot_linvel)))

    # Angular velocity reward
    reward_angular_velocity = delta * (1.0 / (1.0 + np.linalg.norm(robot_angvel)))

    # Action reward
    reward_action = epsilon * (1.0 / (1.0 + np.linalg.norm(actions)))

    # Total reward
    reward = reward_distance + reward_stability + reward_velocity + reward_angular_velocity + reward_action

    return reward
