def reward_function(ball_pos, ball_vel, tray_pos, tray_rot):

    # 1st reward: ball keeps in the center 
    ball_center_dist_3d = torch.norm(tool_pos - ball_pos, p=2, dim=-1)
    center_dist_reward = 1.0/(1.0+ball_center_dist_3d)

    # 2nd reward: ball unmove 
    norm_ball_linvel = torch.norm(ball_linvels, p=2, dim=-1)  
    ball_vel_reward = 1.0/(1.0+norm_ball_linvel)

    # 3rd reward: rotation not too much
    rot_diff = torch.norm(tool_rot - self.default_tool_rot, p=2, dim=-1)
    tool_rot_reward = 1.0/(1.0+rot_diff)

    # stay alive
    liveness = torch.where(ball_pos[:,2]>0.4, torch.ones_like(ball_pos[:,2]), torch.zeros_like(ball_pos[:,2]))

    # the weight of center_dist_reward and ball_vel_reward should be similar
    final_reward = 10.0*center_dist_reward + 5.0*ball_vel_reward + 1.0*tool_rot_reward + 1.0*liveness

